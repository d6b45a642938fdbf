#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_boltzworld");

pub const TINY_SCHEMA: &str = "group colour: red, blue\ngroup size: s, m, l\nflag promo\n";

/// A small explicit synthetic market over [`TINY_SCHEMA`].
pub fn tiny_config(extra: &str) -> String {
    format!(
        r#"seed = 5
schema = "tiny.schema"
output_dir = "out"
layers = [4, 3]
{extra}

[synthetic]
samples = 400

[[synthetic.groups]]
name = "colour"
table = [[0.6, 0.4]]

[[synthetic.groups]]
name = "size"
parent = "colour"
table = [[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]]

[[synthetic.flags]]
name = "promo"
parent = "size"
p = [0.1, 0.5, 0.9]

[split]
train = 300
test = 100

[cd]
epochs = 3
batch_size = 16

[pcd]
epochs = 1
batch_size = 16
learning_rate = 0.002

[sampling]
burn_in = 20
thin = 2
"#
    )
}

pub fn write_tiny_project(dir: &Path, extra: &str) -> PathBuf {
    std::fs::write(dir.join("tiny.schema"), TINY_SCHEMA).unwrap();
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, tiny_config(extra)).unwrap();
    cfg
}

pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(BIN).args(args).output().expect("binary runs")
}

pub fn run_ok<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = run(args);
    assert!(
        out.status.success(),
        "exit {:?}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}
