#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rigskin::io::{parse_bvh, parse_obj, read_skeleton_json, read_weights, BvhDocument};
use rigskin::{Mesh, Skeleton, WeightMatrix};

pub fn rigskin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigskin"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

/// Runs a command and panics with its stderr unless it exits 0.
pub fn ok(args: &[&str]) -> Output {
    let out = rigskin(args);
    assert!(
        out.status.success(),
        "rigskin {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

pub fn mesh(path: &Path) -> Mesh {
    parse_obj(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn skeleton(path: &Path) -> Skeleton {
    read_skeleton_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn motion(path: &Path) -> BvhDocument {
    parse_bvh(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn weights(path: &Path) -> (Vec<String>, WeightMatrix) {
    read_weights(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every file below `dir`, relative path and contents, sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

pub struct Pipeline {
    pub root: PathBuf,
}

impl Pipeline {
    pub fn dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn file(&self, dir: &str, name: &str) -> String {
        p(&self.dir(dir).join(name)).to_string()
    }

    /// synth → augment → rig → retarget → skin → deform → eval.
    pub fn run(root: &Path, seed: u64, threads: usize) -> Pipeline {
        let pl = Pipeline { root: root.to_path_buf() };
        let seed = seed.to_string();
        let threads = threads.to_string();
        let f = |d: &str, n: &str| pl.file(d, n);
        let d = |n: &str| p(&pl.dir(n)).to_string();
        let run = |args: Vec<String>| {
            let mut all: Vec<String> = vec!["--threads".into(), threads.clone()];
            all.extend(args);
            ok(&all.iter().map(String::as_str).collect::<Vec<_>>());
        };
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        run(v(&["synth", "--out", &d("synth"), "--seed", &seed]));
        run(v(&["augment", "--skeleton", &f("synth", "skeleton.json"), "--remove", "2", "--out", &d("augment"), "--seed", &seed]));
        run(v(&["rig", "--mesh", &f("synth", "mesh.obj"), "--skeleton", &f("augment", "skeleton.json"), "--gt-skeleton", &f("synth", "skeleton.json"), "--out", &d("rig"), "--seed", &seed]));
        run(v(&["retarget", "--motion", &f("synth", "motion.bvh"), "--skeleton", &f("rig", "skeleton.json"), "--out", &d("retarget"), "--seed", &seed]));
        run(v(&[
            "skin", "--mesh", &f("synth", "mesh.obj"), "--skeleton", &f("rig", "skeleton.json"),
            "--motion", &f("retarget", "motion.bvh"), "--gt-weights", &f("synth", "weights.txt"),
            "--gt-skeleton", &f("synth", "skeleton.json"), "--gt-motion", &f("synth", "motion.bvh"),
            "--out", &d("skin"), "--seed", &seed,
        ]));
        run(v(&[
            "deform", "--mesh", &f("synth", "mesh.obj"), "--weights", &f("skin", "weights.txt"),
            "--skeleton", &f("rig", "skeleton.json"), "--motion", &f("retarget", "motion.bvh"),
            "--out", &d("pred"), "--seed", &seed,
        ]));
        run(v(&[
            "deform", "--mesh", &f("synth", "mesh.obj"), "--weights", &f("synth", "weights.txt"),
            "--skeleton", &f("synth", "skeleton.json"), "--motion", &f("synth", "motion.bvh"),
            "--out", &d("gt"), "--seed", &seed,
        ]));
        run(v(&[
            "eval", "--pred-skeleton", &f("rig", "skeleton.json"), "--gt-skeleton", &f("synth", "skeleton.json"),
            "--pred-weights", &f("skin", "weights.txt"), "--gt-weights", &f("synth", "weights.txt"),
            "--pred-frames", &d("pred"), "--gt-frames", &d("gt"), "--out", &d("eval"), "--seed", &seed,
        ]));
        pl
    }

    /// `key = value` pairs of the eval report.
    pub fn report(&self) -> Vec<(String, f64)> {
        std::fs::read_to_string(self.dir("eval").join("report.txt"))
            .unwrap()
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.parse().unwrap()))
            .collect()
    }
}
