#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use outlyingness::simlab::toy_dataset;
use outlyingness::DataMatrix;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spadimo"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn spadimo")
}

pub fn write_csv(path: &Path, data: &DataMatrix, header: bool) {
    let mut s = String::new();
    if header {
        let names: Vec<String> = (1..=data.p()).map(|j| format!("v{j}")).collect();
        s.push_str(&names.join(","));
        s.push('\n');
    }
    for i in 0..data.n() {
        let row: Vec<String> = (0..data.p()).map(|j| data.get(i, j).to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    std::fs::write(path, s).unwrap();
}

/// Toy data (outlier in row 51) written with a `v1..v30` header.
pub fn toy_csv(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join(format!("toy_{seed}.csv"));
    write_csv(&path, &toy_dataset(seed).unwrap(), true);
    path
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}
