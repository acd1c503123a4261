//! Compiles the guide's chapters as doc-tests so the snippets stay current.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(intro, "intro.md");
chapter!(tensors, "tensors.md");
chapter!(flow_matching, "flow-matching.md");
chapter!(models, "models.md");
chapter!(data, "data.md");
chapter!(training, "training.md");
chapter!(metrics, "metrics.md");
chapter!(cli, "cli.md");
