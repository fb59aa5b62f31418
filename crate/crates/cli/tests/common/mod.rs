#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use chromatwin::recipe::seed_recipes;
use chromatwin::store::{NewRecord, Source, Store};
use chromatwin::twin::{Oracle, OracleConfig};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn chromatwin(data_dir: &Path, args: &[&str]) -> Run {
    let out: Output = Command::new(env!("CARGO_BIN_EXE_chromatwin"))
        .arg("--data-dir")
        .arg(data_dir)
        .args(args)
        .env_remove("CHROMATWIN_DATA_DIR")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// The seven seed recipes measured by the noisy oracle, plus a few extras
/// from two other contributors.
pub fn fill_fixture(store: &Store) {
    let mut oracle = Oracle::new(OracleConfig::default().with_seed(11)).unwrap();
    for r in seed_recipes() {
        let c = oracle.measure(&r);
        store
            .submit(NewRecord::new(r, c, "Scientist 1", Source::Simulated).institution("Purdue"))
            .unwrap();
    }
    for (i, counts) in [[5, 3, 0, 1], [0, 8, 2, 2], [12, 0, 4, 0]].into_iter().enumerate() {
        let r = chromatwin::Recipe::from_counts(counts);
        let c = oracle.measure(&r);
        let who = if i % 2 == 0 { "Scientist 2" } else { "Scientist 3" };
        store.submit(NewRecord::new(r, c, who, Source::DirectRgb)).unwrap();
    }
}
