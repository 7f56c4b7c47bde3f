//! In-memory triple store.
//!
//! Triples are kept in ordered sets so that loading is order-independent and
//! every read (neighborhoods, traversals, serialization) is deterministic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

/// Maximum number of outgoing relations handed to a prompt.
pub const DEFAULT_NEIGHBORHOOD_CAP: usize = 200;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    Malformed { line: usize, found: usize },
    #[error("triple source contains no triples")]
    Empty,
    #[error("topic entities not present in graph: {}", .0.join(", "))]
    MissingTopics(Vec<String>),
    #[error("subgraph radius must be at least 1")]
    ZeroHops,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: impl Into<String>, relation: impl Into<String>, object: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }
}

/// Immutable after construction; share it freely between workers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    entities: BTreeSet<String>,
    relations: BTreeSet<String>,
    triples: BTreeSet<Triple>,
    adjacency: BTreeMap<String, BTreeSet<(String, String)>>,
}

impl KnowledgeGraph {
    pub fn from_triples<I>(triples: I) -> Self
    where
        I: IntoIterator<Item = Triple>,
    {
        let mut graph = Self::default();
        for triple in triples {
            graph.insert(triple);
        }
        graph
    }

    fn insert(&mut self, triple: Triple) {
        if self.triples.contains(&triple) {
            return;
        }
        self.entities.insert(triple.subject.clone());
        self.entities.insert(triple.object.clone());
        self.relations.insert(triple.relation.clone());
        self.adjacency
            .entry(triple.subject.clone())
            .or_default()
            .insert((triple.relation.clone(), triple.object.clone()));
        self.triples.insert(triple);
    }

    /// Parses the TAB-separated triple format. Blank lines are skipped and
    /// duplicate lines collapse into a single triple.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, GraphError> {
        let mut graph = Self::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
                return Err(GraphError::Malformed {
                    line: idx + 1,
                    found: fields.len(),
                });
            }
            graph.insert(Triple::new(fields[0], fields[1], fields[2]));
        }
        if graph.triples.is_empty() {
            return Err(GraphError::Empty);
        }
        Ok(graph)
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let file = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(file))
    }

    /// Writes the graph back in the triple format, one line per triple in
    /// sorted order.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.triples {
            writeln!(out, "{}\t{}\t{}", t.subject, t.relation, t.object)?;
        }
        Ok(())
    }

    pub fn save_path(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_to(&mut out)?;
        out.flush()
    }

    pub fn entities(&self) -> &BTreeSet<String> {
        &self.entities
    }

    pub fn relations(&self) -> &BTreeSet<String> {
        &self.relations
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    pub fn contains_entity(&self, entity: &str) -> bool {
        self.entities.contains(entity)
    }

    /// Outgoing `(relation, object)` edges of one entity.
    pub fn edges(&self, entity: &str) -> impl Iterator<Item = &(String, String)> {
        self.adjacency.get(entity).into_iter().flatten()
    }

    /// Distinct outgoing relations of every frontier entity, in lexicographic
    /// order. Unknown entities contribute nothing.
    pub fn outgoing_relations(&self, frontier: &EntityFrontier) -> Vec<String> {
        let mut out = BTreeSet::new();
        for entity in frontier.iter() {
            for (relation, _) in self.edges(entity) {
                out.insert(relation.as_str());
            }
        }
        out.into_iter().map(str::to_owned).collect()
    }

    /// Like [`outgoing_relations`](Self::outgoing_relations) but keeps only
    /// the first `cap` relations.
    pub fn neighborhood(&self, frontier: &EntityFrontier, cap: usize) -> Vec<String> {
        let mut rels = self.outgoing_relations(frontier);
        rels.truncate(cap);
        rels
    }

    /// Follows `relation` from every frontier entity. Returns `None` when no
    /// edge matches, meaning the relation cannot extend a path from here.
    pub fn traverse(&self, frontier: &EntityFrontier, relation: &str) -> Option<EntityFrontier> {
        let mut next = EntityFrontier::default();
        for entity in frontier.iter() {
            for (rel, object) in self.edges(entity) {
                if rel == relation {
                    next.push(object.clone());
                }
            }
        }
        (!next.is_empty()).then_some(next)
    }

    /// Triples on directed paths of length at most `hops` that start at any
    /// topic entity. Topics absent from the graph are ignored unless none is
    /// present.
    pub fn extract_subgraph<S: AsRef<str>>(&self, topics: &[S], hops: usize) -> Result<KnowledgeGraph, GraphError> {
        if hops == 0 {
            return Err(GraphError::ZeroHops);
        }
        let present: Vec<&str> = topics
            .iter()
            .map(AsRef::as_ref)
            .filter(|t| self.contains_entity(t))
            .collect();
        if present.is_empty() {
            return Err(GraphError::MissingTopics(
                topics.iter().map(|t| t.as_ref().to_owned()).collect(),
            ));
        }

        let mut depth: BTreeMap<&str, usize> = BTreeMap::new();
        let mut queue = VecDeque::new();
        for topic in present {
            if depth.insert(topic, 0).is_none() {
                queue.push_back(topic);
            }
        }
        let mut kept = Vec::new();
        while let Some(entity) = queue.pop_front() {
            let d = depth[entity];
            if d >= hops {
                continue;
            }
            for (relation, object) in self.edges(entity) {
                kept.push(Triple::new(entity, relation.as_str(), object.as_str()));
                if !depth.contains_key(object.as_str()) {
                    depth.insert(object.as_str(), d + 1);
                    queue.push_back(object.as_str());
                }
            }
        }
        Ok(KnowledgeGraph::from_triples(kept))
    }
}

/// Deduplicated entities in order of first reachability.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct EntityFrontier(Vec<String>);

impl EntityFrontier {
    pub fn single(entity: impl Into<String>) -> Self {
        Self(vec![entity.into()])
    }

    /// Appends `entity` unless it is already present.
    pub fn push(&mut self, entity: String) {
        if !self.0.contains(&entity) {
            self.0.push(entity);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn first(&self) -> Option<&str> {
        self.0.first().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }
}

impl<S: Into<String>> FromIterator<S> for EntityFrontier {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        let mut f = Self::default();
        for e in iter {
            f.push(e.into());
        }
        f
    }
}

impl fmt::Display for EntityFrontier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join(", "))
    }
}
