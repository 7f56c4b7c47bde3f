//! Runs the offline examples in-process so they cannot rot.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main();
            }
        }
    };
}

example!(graph_basics);
example!(prompts_and_parsing);
example!(scripted_session);
example!(exploration_memory);
example!(threshold_sweep);
example!(evaluate_dataset);
