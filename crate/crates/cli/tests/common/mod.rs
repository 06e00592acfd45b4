//! Fixtures shared by the CLI integration and acceptance suites.
#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use serde_json::json;
use tonaleval::signal::{write_wav, AudioBuffer};

pub const BIN: &str = env!("CARGO_BIN_EXE_tonaleval");
pub const EXPORT_TOKEN: &str = "acceptance-operator";

/// Evaluation sentences with their TBU counts and the printed Tacotron2 / VITS TER (%).
pub const TER_TABLE: [(&str, usize, f64, f64); 25] = [
    ("MZ000113-13", 25, 28.00, 16.00),
    ("MZ000115-13", 22, 13.64, 9.09),
    ("MZ000115-8", 30, 10.00, 3.33),
    ("MZ000115-9", 22, 18.18, 13.64),
    ("MZ000116-12", 25, 4.00, 12.00),
    ("MZ000116-13", 16, 6.25, 0.0),
    ("MZ000116-15", 18, 11.11, 5.56),
    ("MZ000116-6", 23, 21.74, 0.0),
    ("MZ000123-13", 13, 15.38, 0.0),
    ("MZ000123-19", 18, 11.11, 0.0),
    ("MZ000123-9", 18, 33.33, 0.0),
    ("MZ000124-6", 20, 15.00, 15.00),
    ("MZ00051-7", 20, 5.00, 5.00),
    ("MZ00053-17", 15, 13.33, 0.0),
    ("MZ00056-14", 29, 10.34, 10.34),
    ("MZ00056-20", 23, 13.04, 0.0),
    ("MZ00056-5", 22, 13.64, 4.55),
    ("MZ00057-13", 16, 6.25, 12.50),
    ("MZ00057-36", 15, 20.00, 6.67),
    ("MZ00058-22", 15, 13.33, 0.0),
    ("MZ00058-25", 18, 5.56, 11.11),
    ("MZ00059-8", 24, 12.50, 0.0),
    ("MZ00060-12", 18, 11.11, 5.56),
    ("MZ00060-2", 18, 5.56, 5.56),
    ("MZ00060-4", 17, 5.88, 5.88),
];

/// Error counts implied by the printed percentages, `round(pct * n_tbu / 100)`.
pub const TACOTRON2_ERRORS: [usize; 25] = [
    7, 3, 3, 4, 1, 1, 2, 5, 2, 2, 6, 3, 1, 2, 3, 3, 3, 1, 3, 2, 1, 3, 2, 1, 1,
];
pub const VITS_ERRORS: [usize; 25] = [
    4, 2, 1, 3, 3, 0, 1, 0, 0, 0, 0, 3, 1, 0, 3, 0, 1, 2, 1, 0, 2, 0, 1, 1, 1,
];

const TONES: [&str; 4] = ["High", "Low", "Rising", "Falling"];

/// Annotation CSV marking the first `errors[i]` TBUs of sentence `i` wrong.
/// `tone_of(k)` picks the intended tone of the k-th error overall.
pub fn annotation_csv(errors: &[usize], tone_of: impl Fn(usize) -> usize) -> String {
    let mut s = String::from("id,n_tbu,error_index,intended_tone\n");
    let mut k = 0;
    for ((id, n_tbu, _, _), &e) in TER_TABLE.iter().zip(errors) {
        if e == 0 {
            s += &format!("{id},{n_tbu},,\n");
        }
        for idx in 0..e {
            s += &format!("{id},{n_tbu},{idx},{}\n", TONES[tone_of(k)]);
            k += 1;
        }
    }
    s
}

/// Harmonic tone with a slow vibrato; stands in for voiced speech.
pub fn voiced(sr: u32, seconds: f64, f0: f64, depth: f64) -> AudioBuffer<f64> {
    let n = (seconds * f64::from(sr)) as usize;
    let mut phase = 0.0f64;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / f64::from(sr);
            let f = f0 + depth * (2.0 * std::f64::consts::PI * 2.0 * t).sin();
            phase += 2.0 * std::f64::consts::PI * f / f64::from(sr);
            0.35 * phase.sin() + 0.15 * (2.0 * phase).sin() + 0.05 * (3.0 * phase).sin()
        })
        .collect();
    AudioBuffer::new(samples, sr)
}

pub fn write_audio(path: &Path, buf: &AudioBuffer<f64>) {
    std::fs::write(path, write_wav(buf)).unwrap();
}

pub fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(BIN);
    c.args(args);
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().unwrap()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a study of `n_utts` sentences in two conditions; returns the manifest path.
pub fn write_study(dir: &Path, n_utts: usize, seed: u64) -> PathBuf {
    let mut stimuli = Vec::new();
    for (c, cond) in ["Natural", "VITS"].iter().enumerate() {
        for u in 0..n_utts {
            let id = format!("MZ0007-{}", u + 1);
            let file = format!("{cond}-{id}.wav");
            write_audio(
                &dir.join(&file),
                &voiced(16_000, 0.2, 140.0 + 10.0 * (u + c) as f64, 5.0),
            );
            stimuli.push(json!({ "id": id, "condition": cond, "audio": file }));
        }
    }
    let manifest = json!({ "study_id": "durability", "seed": seed, "conditions": ["Natural", "VITS"], "stimuli": stimuli });
    let path = dir.join("study.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    path
}

pub struct Server {
    pub child: Child,
    pub addr: SocketAddr,
}

impl Server {
    pub fn spawn(manifest: &Path, log: &Path) -> Server {
        let mut child = Command::new(BIN)
            .args([
                "serve",
                "--study",
                path_str(manifest),
                "--log",
                path_str(log),
                "--listen",
                "127.0.0.1:0",
            ])
            .env("TONALEVAL_EXPORT_TOKEN", EXPORT_TOKEN)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let addr = line
            .trim()
            .strip_prefix("listening on http://")
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"));
        Server {
            addr: addr.parse().unwrap(),
            child,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn kill(mut self) {
        // SIGKILL on unix: no shutdown hooks run.
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
