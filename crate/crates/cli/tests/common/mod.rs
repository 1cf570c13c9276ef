#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_critlog"))
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub out: PathBuf,
}

fn finish(o: Output, out: &Path) -> Run {
    Run {
        code: o.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        out: out.to_path_buf(),
    }
}

/// Run `critlog <cmd>` with an inline config written next to `out`.
pub fn run(cmd: &str, config: Option<&str>, out: &Path, extra: &[&str]) -> Run {
    let mut c = bin();
    c.arg(cmd).arg("--out").arg(out);
    if let Some(text) = config {
        fs::create_dir_all(out.parent().expect("parent")).unwrap();
        let path = out.with_extension("config.json");
        fs::write(&path, text).unwrap();
        c.arg("--config").arg(path);
    }
    c.args(extra);
    finish(c.output().expect("spawn critlog"), out)
}

pub fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Preamble lines, header and data rows of a CSV written by the tool.
pub struct Table {
    pub preamble: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn table(path: &Path) -> Table {
    let text = read(path);
    let preamble: Vec<String> = text.lines().take_while(|l| l.starts_with('#')).map(String::from).collect();
    let body: String = text.lines().skip(preamble.len()).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    Table { preamble, header, rows }
}

impl Table {
    pub fn column(&self, name: &str) -> Vec<String> {
        let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].clone()).collect()
    }
}
