//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tonaleval::corpus::{
    parse_textgrid, parse_utterance_id, serialize_textgrid, Interval, IntervalTier, TextGridDoc,
};
use tonaleval::metrics::{
    cepstral_distance, dtw_align, evaluate_pair, f0_corr, mcd, rmse_f0, AlignmentPath, Correlation,
};
use tonaleval::scalar::seconds_to_samples;
use tonaleval::signal::{estimate_f0, AudioBuffer, F0Contour, FeatureConfig, MfccMatrix};
use tonaleval::stats::{
    ingest_scores, paired_t_test, zscore_rescale, zscore_rescale_observations, Grouping,
    Naturalness, Observation, RatingRecord,
};

type Check = Result<String, String>;
type Criterion = fn() -> Check;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure(
        (got - want).abs() <= tol,
        format!("{what}: got {got}, want {want} +/- {tol}"),
    )
}

fn read_csv(path: &std::path::Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn ter_reproduction() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let taco = dir.path().join("tacotron2.csv");
    let vits = dir.path().join("vits.csv");
    std::fs::write(&taco, annotation_csv(&TACOTRON2_ERRORS, |_| 0)).unwrap();
    std::fs::write(&vits, annotation_csv(&VITS_ERRORS, |_| 1)).unwrap();
    let out = dir.path().join("out");
    let start = Instant::now();
    let o = run(
        &[
            "ter",
            path_str(&taco),
            path_str(&vits),
            "--out",
            path_str(&out),
        ],
        &[],
    );
    let elapsed = start.elapsed();
    ensure(o.status.success(), format!("ter exited with {}", o.status))?;
    ensure(elapsed.as_secs_f64() < 1.0, format!("runtime {elapsed:?}"))?;

    let mut averages = BTreeMap::new();
    for row in read_csv(&out.join("ter.csv")) {
        let ter: f64 = row[4].parse().unwrap();
        if row[1] == "AVERAGE" {
            averages.insert(row[0].clone(), ter);
            continue;
        }
        let (_, _, t, v) = TER_TABLE
            .iter()
            .find(|r| r.0 == row[1])
            .ok_or(format!("unexpected id {}", row[1]))?;
        let want = if row[0] == "tacotron2" { *t } else { *v };
        close(ter, want, 0.01, &format!("{} {}", row[0], row[1]))?;
    }
    close(averages["tacotron2"], 12.93, 0.01, "Tacotron2 average")?;
    close(averages["vits"], 5.67, 0.01, "VITS average")?;
    Ok(format!(
        "25 sentences match, averages {:.4} / {:.4}, {:.0} ms",
        averages["tacotron2"],
        averages["vits"],
        elapsed.as_secs_f64() * 1e3
    ))
}

fn tone_distribution() -> Check {
    // Pooled VITS counts {7, 15, 2, 5}: 29 errors.
    let mut errors = VITS_ERRORS;
    errors[0] -= 1;
    let tone_of = |k: usize| match k {
        0..7 => 0,
        7..22 => 1,
        22..24 => 2,
        _ => 3,
    };
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("vits.csv");
    std::fs::write(&file, annotation_csv(&errors, tone_of)).unwrap();
    let out = dir.path().join("out");
    let o = run(&["ter", path_str(&file), "--out", path_str(&out)], &[]);
    ensure(o.status.success(), format!("ter exited with {}", o.status))?;
    let want = [
        ("High", 24.1),
        ("Low", 51.7),
        ("Rising", 6.9),
        ("Falling", 17.3),
    ];
    let rows = read_csv(&out.join("tone_distribution.csv"));
    let mut got = Vec::new();
    for (tone, pct) in want {
        let row = rows
            .iter()
            .find(|r| r[1] == tone)
            .ok_or(format!("missing {tone}"))?;
        let p: f64 = row[3].parse().unwrap();
        close(p, pct, 0.15, tone)?;
        got.push(format!("{tone} {p:.2}"));
    }
    Ok(got.join(", "))
}

fn mcd_oracle() -> Check {
    let rows = |offset: f64| -> Vec<Vec<f64>> {
        (0..40)
            .map(|t| {
                (0..14)
                    .map(|k| (t * k) as f64 * 0.01 + if k == 0 { 5.0 } else { offset })
                    .collect()
            })
            .collect()
    };
    let a = MfccMatrix::from_rows(rows(0.0), 0.025, 0.01, 22_050);
    let b = MfccMatrix::from_rows(rows(0.1), 0.025, 0.01, 22_050);
    let offset = mcd(&a, &b, &AlignmentPath::diagonal(40)).map_err(|e| e.to_string())?;
    close(offset, 2.2144, 1e-4, "offset MCD")?;

    let cfg = FeatureConfig::default();
    // Broadband floor keeps every mel band above the log floor, as in recorded speech.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut buf = voiced(22_050, 1.0, 160.0, 20.0);
    buf.samples
        .iter_mut()
        .for_each(|s| *s += rng.random_range(-1e-3..1e-3));
    let id = parse_utterance_id("MZ00001-1").unwrap();
    let same = evaluate_pair(id.clone(), &buf, &buf, &cfg).map_err(|e| e.to_string())?;
    ensure(same.mcd_db == 0.0, format!("identical MCD {}", same.mcd_db))?;
    let quiet = AudioBuffer::new(
        buf.samples.iter().map(|s| s * 0.5).collect(),
        buf.sample_rate,
    );
    let gain = evaluate_pair(id, &buf, &quiet, &cfg).map_err(|e| e.to_string())?;
    ensure(
        gain.mcd_db < 0.01,
        format!("gain-scaled MCD {}", gain.mcd_db),
    )?;
    Ok(format!(
        "offset {offset:.6} dB, identical 0, gain-scaled {:.2e} dB",
        gain.mcd_db
    ))
}

/// Minimum over every monotone path, summing distances in path order.
fn exhaustive(d: &[Vec<f64>], i: usize, j: usize, acc: f64) -> f64 {
    let acc = acc + d[i][j];
    let (n, m) = (d.len(), d[0].len());
    if i + 1 == n && j + 1 == m {
        return acc;
    }
    let mut best = f64::INFINITY;
    if i + 1 < n && j + 1 < m {
        best = best.min(exhaustive(d, i + 1, j + 1, acc));
    }
    if i + 1 < n {
        best = best.min(exhaustive(d, i + 1, j, acc));
    }
    if j + 1 < m {
        best = best.min(exhaustive(d, i, j + 1, acc));
    }
    best
}

fn dtw_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let random = |n: usize, rng: &mut ChaCha8Rng| {
        let rows = (0..n)
            .map(|_| (0..14).map(|_| rng.random_range(-8.0..8.0)).collect())
            .collect();
        MfccMatrix::from_rows(rows, 0.025, 0.01, 22_050)
    };
    for case in 0..100 {
        let (n, m) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let a = random(n, &mut rng);
        let b = random(m, &mut rng);
        let d: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| cepstral_distance(a.frame(i), b.frame(j)))
                    .collect()
            })
            .collect();
        let dp = dtw_align(&a, &b).map_err(|e| e.to_string())?;
        let brute = exhaustive(&d, 0, 0, 0.0);
        ensure(
            dp.cost == brute,
            format!(
                "case {case} ({n}x{m}): dp {} vs exhaustive {brute}",
                dp.cost
            ),
        )?;
        let replay = dp
            .path
            .pairs()
            .iter()
            .fold(0.0, |acc, &(i, j)| acc + d[i][j]);
        ensure(
            replay == dp.cost,
            format!("case {case}: path sums to {replay}, cost {}", dp.cost),
        )?;
    }
    Ok("100 instances, exact equality".into())
}

fn f0_tracker() -> Check {
    let sr = 22_050u32;
    let cfg = FeatureConfig::default();
    let n = sr as usize;
    let sine = AudioBuffer::new(
        (0..n)
            .map(|i| 0.6 * (2.0 * std::f64::consts::PI * 220.0 * i as f64 / f64::from(sr)).sin())
            .collect(),
        sr,
    );
    let c = estimate_f0(&sine, &cfg).map_err(|e| e.to_string())?;
    let margin = c.len() / 20 + 2;
    let interior = &c.f0[margin..c.len() - margin];
    let ok = interior
        .iter()
        .filter(|&&f| f > 0.0 && (f - 220.0).abs() <= 2.0)
        .count() as f64
        / interior.len() as f64;
    ensure(ok >= 0.90, format!("sine: {:.1} % within 2 Hz", ok * 100.0))?;

    // Linear chirp; instantaneous frequency at the frame centre is the oracle.
    let secs = 2.0;
    let rate = 200.0 / secs;
    let chirp = AudioBuffer::new(
        (0..(secs * f64::from(sr)) as usize)
            .map(|i| {
                let t = i as f64 / f64::from(sr);
                0.6 * (2.0 * std::f64::consts::PI * (100.0 * t + 0.5 * rate * t * t)).sin()
            })
            .collect(),
        sr,
    );
    let c = estimate_f0(&chirp, &cfg).map_err(|e| e.to_string())?;
    let frame = seconds_to_samples(cfg.frame_length, sr);
    let hop = seconds_to_samples(cfg.hop, sr);
    let (mut voiced_n, mut hit) = (0usize, 0usize);
    for (t, &f) in c.f0.iter().enumerate() {
        if f > 0.0 {
            voiced_n += 1;
            let centre = (t * hop + frame / 2) as f64 / f64::from(sr);
            if (f - (100.0 + rate * centre)).abs() <= 5.0 {
                hit += 1;
            }
        }
    }
    let chirp_ok = hit as f64 / voiced_n.max(1) as f64;
    ensure(
        voiced_n > c.len() / 2,
        format!("chirp: only {voiced_n}/{} frames voiced", c.len()),
    )?;
    ensure(
        chirp_ok >= 0.85,
        format!("chirp: {:.1} % within 5 Hz", chirp_ok * 100.0),
    )?;

    let silence = AudioBuffer::new(vec![0.0f64; n], sr);
    let s = estimate_f0(&silence, &cfg).map_err(|e| e.to_string())?;
    ensure(
        s.voiced_fraction() == 0.0,
        format!("silence voiced {}", s.voiced_fraction()),
    )?;
    Ok(format!(
        "sine {:.1} %, chirp {:.1} % of {voiced_n} voiced frames, silence 0 %",
        ok * 100.0,
        chirp_ok * 100.0
    ))
}

fn f0_properties() -> Check {
    let base: Vec<f64> = (0..50).map(|i| 120.0 + 2.0 * i as f64).collect();
    let contour = |v: Vec<f64>| F0Contour::from_hz(v, 0.01);
    let path = AlignmentPath::diagonal(50);
    let shifted = contour(base.iter().map(|f| f + 10.0).collect());
    let r = rmse_f0(&contour(base.clone()), &shifted, &path).map_err(|e| e.to_string())?;
    let rmse = r.rmse.ok_or("rmse undefined")?;
    close(rmse, 10.0, 1e-9, "offset RMSE")?;
    let reversed = contour(base.iter().rev().copied().collect());
    let corr = f0_corr(&contour(base.clone()), &reversed, &path).map_err(|e| e.to_string())?;
    let rho = corr.value().ok_or("reversed correlation undefined")?;
    close(rho, -1.0, 1e-9, "reversed correlation")?;
    let flat =
        f0_corr(&contour(vec![150.0; 50]), &contour(base), &path).map_err(|e| e.to_string())?;
    ensure(
        matches!(flat, Correlation::Undefined(_)),
        format!("constant contour gave {flat:?}"),
    )?;
    Ok(format!(
        "rmse {rmse}, corr {rho}, constant contour {flat:?}"
    ))
}

fn statistics() -> Check {
    let t = paired_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).map_err(|e| e.to_string())?;
    close(t.t_value, 4.2426, 1e-3, "t")?;
    ensure(t.df == 4, format!("df {}", t.df))?;
    close(t.p_value, 0.0132, 5e-4, "p")?;

    let x: Vec<f64> = (0..25).map(|i| 3.0 + (i % 4) as f64 * 0.3).collect();
    let y: Vec<f64> = (0..25).map(|i| 2.5 + (i % 3) as f64 * 0.2).collect();
    let t25 = paired_t_test(&x, &y).map_err(|e| e.to_string())?;
    ensure(t25.df == 24, format!("n=25 df {}", t25.df))?;

    let id = |s: &str| parse_utterance_id(s).unwrap();
    let rec =
        |s: &str, u: &str, l: u8| RatingRecord::new(s, id(u), "N", Naturalness::Real, l).unwrap();
    let z = zscore_rescale(
        &[
            rec("A", "MZ001-1", 3),
            rec("A", "MZ001-2", 5),
            rec("B", "MZ001-1", 1),
            rec("B", "MZ001-2", 3),
        ],
        Grouping::Condition,
    )
    .map_err(|e| e.to_string())?;
    let s1 = z.cells[&("N".to_string(), id("MZ001-1"))].scaled;
    let s2 = z.cells[&("N".to_string(), id("MZ001-2"))].scaled;
    close(s1, 1.845, 1e-3, "scaled i1")?;
    close(s2, 4.155, 1e-3, "scaled i2")?;

    // Per-subject affine transforms against a fixed reference scale.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let subjects = ["s1", "s2", "s3", "s4", "s5", "s6"];
    let items = ["MZ002-1", "MZ002-2", "MZ002-3", "MZ002-4", "MZ002-5"];
    let ids: Vec<_> = items.iter().map(|u| id(u)).collect();
    let mut obs = Vec::new();
    for s in subjects {
        for cond in ["A", "B"] {
            for u in &ids {
                let value = rng.random_range(1..=5) as f64 + rng.random_range(-0.4..0.4);
                obs.push(Observation {
                    subject: s,
                    condition: cond,
                    utterance: u,
                    value,
                });
            }
        }
    }
    let transforms: BTreeMap<&str, (f64, f64)> = subjects
        .iter()
        .map(|&s| {
            (
                s,
                (rng.random_range(0.2..4.0), rng.random_range(-10.0..10.0)),
            )
        })
        .collect();
    let moved: Vec<Observation> = obs
        .iter()
        .map(|o| {
            let (a, b) = transforms[o.subject];
            Observation {
                value: a * o.value + b,
                ..*o
            }
        })
        .collect();
    let mut drift = 0.0f64;
    for grouping in [Grouping::Condition, Grouping::ConditionSentence] {
        let base = zscore_rescale_observations(&obs, grouping, None).map_err(|e| e.to_string())?;
        let fixed = Some(base.reference);
        let again =
            zscore_rescale_observations(&moved, grouping, fixed).map_err(|e| e.to_string())?;
        for (k, c) in &base.cells {
            drift = drift.max((c.scaled - again.cells[k].scaled).abs());
        }
    }
    ensure(drift <= 1e-9, format!("affine drift {drift:e}"))?;
    Ok(format!(
        "t {:.4}, df 4, p {:.5}; n=25 df 24; scaled {s1:.4}/{s2:.4}; affine drift {drift:.1e}",
        t.t_value, t.p_value
    ))
}

fn label(rng: &mut ChaCha8Rng) -> String {
    const PIECES: [&str; 10] = [
        "MZ000113-13 ",
        "ka ",
        "\"",
        "\"\"",
        "hmangaih",
        "ṭhian ",
        "",
        "a\nb",
        "100 ",
        "Dr. ",
    ];
    (0..rng.random_range(0..5))
        .map(|_| PIECES[rng.random_range(0..PIECES.len())])
        .collect()
}

fn textgrid_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n_docs = 40;
    let (mut quoted, mut empty) = (0, 0);
    for d in 0..n_docs {
        let xmax = rng.random_range(1.0..30.0);
        let mut tiers = Vec::new();
        for t in 0..rng.random_range(1..=4) {
            let n = if t == 1 && d % 3 == 0 {
                0
            } else {
                rng.random_range(1..8)
            };
            let mut cuts: Vec<f64> = (0..n.max(1) - 1)
                .map(|_| rng.random_range(0.0..xmax))
                .collect();
            cuts.sort_by(f64::total_cmp);
            cuts.insert(0, 0.0);
            cuts.push(xmax);
            let intervals: Vec<Interval> = if n == 0 {
                Vec::new()
            } else {
                cuts.windows(2)
                    .map(|w| Interval {
                        xmin: w[0],
                        xmax: w[1],
                        label: label(&mut rng),
                    })
                    .collect()
            };
            quoted += intervals.iter().filter(|iv| iv.label.contains('"')).count();
            empty +=
                usize::from(intervals.is_empty() || intervals.iter().all(|iv| iv.label.is_empty()));
            tiers.push(IntervalTier {
                name: format!("tier \"{t}\""),
                xmin: 0.0,
                xmax,
                intervals,
            });
        }
        let doc = TextGridDoc {
            xmin: 0.0,
            xmax,
            tiers,
        };
        let text = serialize_textgrid(&doc);
        let parsed = parse_textgrid(&text).map_err(|e| format!("doc {d}: {e}"))?;
        ensure(parsed.doc == doc, format!("doc {d} changed on round trip"))?;
        ensure(
            serialize_textgrid(&parsed.doc) == text,
            format!("doc {d}: text not stable"),
        )?;
    }
    ensure(
        quoted > 0 && empty > 0,
        "generator produced no quotes or no empty tiers",
    )?;
    Ok(format!(
        "{n_docs} documents, {quoted} quoted labels, {empty} empty tiers"
    ))
}

fn dnsmos_ingestion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut text = String::from("condition,id,score\n");
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    for cond in ["Natural", "Tacotron2", "VITS"] {
        for (id, ..) in TER_TABLE {
            let v = (rng.random_range(3.0..4.5) * 1e4f64).round() / 1e4;
            *sums.entry(cond).or_default() += v;
            text += &format!("{cond},{id},{v}\n");
        }
    }
    let table = ingest_scores(&text).map_err(|e| e.to_string())?;
    let again = ingest_scores(&table.to_csv()).map_err(|e| e.to_string())?;
    ensure(again == table, "score table changed on round trip")?;

    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("dnsmos.csv");
    std::fs::write(&scores, &text).unwrap();
    let ratings = dir.path().join("ratings.csv");
    let mut r = String::from("subject,sentence,type,mos,naturalness\n");
    for (s, bias) in [("p1", 0), ("p2", 1)] {
        for (k, (id, ..)) in TER_TABLE.iter().enumerate().take(5) {
            for (c, cond) in ["Natural", "VITS"].iter().enumerate() {
                r += &format!("{s},{id},{cond},{},Real\n", 1 + (k + c + bias) % 5);
            }
        }
    }
    std::fs::write(&ratings, r).unwrap();
    let out = dir.path().join("out");
    let o = run(
        &[
            "stats",
            "--ratings",
            path_str(&ratings),
            "--scores",
            path_str(&scores),
            "--out",
            path_str(&out),
        ],
        &[],
    );
    ensure(
        o.status.success(),
        format!(
            "stats exited with {}: {}",
            o.status,
            String::from_utf8_lossy(&o.stderr)
        ),
    )?;
    for row in read_csv(&out.join("score_means.csv")) {
        let want = sums[row[0].as_str()] / 25.0;
        close(row[2].parse().unwrap(), want, 5e-5, &row[0])?;
    }
    Ok("absolute DNSMOS/MCD/RMSE/MOS values need the unpublished corpus; ingestion round-trip and pipeline means verified".into())
}

fn durability() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_study(dir.path(), 10, 5);
    let log = dir.path().join("ratings.ndjson");
    let client = reqwest::blocking::Client::new();
    let export = |srv: &Server| -> Result<String, String> {
        let resp = client
            .get(srv.url("/api/export"))
            .bearer_auth(EXPORT_TOKEN)
            .send()
            .map_err(|e| e.to_string())?;
        ensure(
            resp.status().is_success(),
            format!("export status {}", resp.status()),
        )?;
        resp.text().map_err(|e| e.to_string())
    };

    let srv = Server::spawn(&manifest, &log);
    let mut acked = 0;
    for subject in ["L1", "L2", "L3", "L4", "L5"] {
        let s: serde_json::Value = client
            .post(srv.url("/api/session"))
            .json(&serde_json::json!({ "subject_id": subject }))
            .send()
            .and_then(|r| r.json())
            .map_err(|e| e.to_string())?;
        let sid = s["session_id"].as_str().ok_or("no session id")?.to_string();
        loop {
            let next: serde_json::Value = client
                .get(srv.url(&format!("/api/session/{sid}/next")))
                .send()
                .and_then(|r| r.json())
                .map_err(|e| e.to_string())?;
            if next["done"] == true {
                break;
            }
            let token = next["token"].as_str().ok_or("no token")?;
            let audio = client
                .get(srv.url(next["audio_url"].as_str().unwrap()))
                .send()
                .map_err(|e| e.to_string())?;
            ensure(
                audio.status().is_success(),
                format!("audio status {}", audio.status()),
            )?;
            let body = serde_json::json!({
                "token": token,
                "naturalness": if acked % 3 == 0 { "Artificial" } else { "Real" },
                "likert": 1 + acked % 5,
            });
            let resp = client
                .post(srv.url(&format!("/api/session/{sid}/rating")))
                .json(&body)
                .send()
                .map_err(|e| e.to_string())?;
            ensure(
                resp.status().is_success(),
                format!("rating status {}", resp.status()),
            )?;
            acked += 1;
        }
    }
    ensure(acked == 100, format!("acknowledged {acked} ratings"))?;
    let before = export(&srv)?;
    srv.kill();

    let srv = Server::spawn(&manifest, &log);
    let after = export(&srv)?;
    let rows = after.lines().count() - 1;
    ensure(rows == 100, format!("export after restart has {rows} rows"))?;
    ensure(before == after, "export changed across kill -9 and restart")?;
    Ok(format!(
        "{acked} acknowledged, {rows} rows, {} bytes identical",
        after.len()
    ))
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("TER reproduction", ter_reproduction),
        ("Tone distribution", tone_distribution),
        ("MCD analytic oracle", mcd_oracle),
        ("DTW oracle equivalence", dtw_oracle),
        ("F0 tracker", f0_tracker),
        ("RMSE_f0/F0_corr properties", f0_properties),
        ("Statistics", statistics),
        ("TextGrid round-trip", textgrid_round_trip),
        (
            "Published absolute values (not reproducible)",
            dnsmos_ingestion,
        ),
        ("Service durability", durability),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
