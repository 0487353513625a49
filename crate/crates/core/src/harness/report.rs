//! Report bundle: CSV tables, a JSON record of the whole experiment, and
//! an aligned text rendering.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{AlphaResult, ExperimentResult, MeanStd};
use crate::error::{Error, Result};
use crate::eval::{ImpactRatios, Ratio};
use crate::segment::TimingMode;

pub const RESULT_JSON: &str = "experiment.json";
pub const REPORT_TXT: &str = "report.txt";

/// Fixed-precision rendering so reports compare byte for byte.
fn num(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        format!("{v:.6}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), num)
}

/// Accuracy columns Est/Orig, Est/Min, Est/Peak, Est/Sel, or the time
/// columns Orig/Est, Min/Est, Peak/Est, Sel/Est.
fn impact_columns(i: &ImpactRatios, accuracy: bool) -> [Ratio; 4] {
    if accuracy {
        [i.acc_est_orig, i.acc_est_min, i.acc_est_peak, i.acc_est_sel]
    } else {
        [i.time_orig_est, i.time_min_est, i.time_peak_est, i.time_sel_est]
    }
}

fn alpha_str(a: f64) -> String {
    format!("{a:.2}")
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn h(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn levels_header(lead: &[&str], prefix: &str, levels: usize) -> Vec<String> {
    let mut v = h(lead);
    v.extend((0..levels).map(|l| format!("{prefix}{l}")));
    v
}

fn each_learner(res: &ExperimentResult) -> impl Iterator<Item = (&AlphaResult, &super::LearnerResult)> {
    res.alphas.iter().flat_map(|a| a.learners.iter().map(move |l| (a, l)))
}

/// Writes every report file into `dir` and returns their paths.
pub fn write_report(dir: &Path, res: &ExperimentResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let r = res.levels;
    let mut out = Vec::new();
    let mut emit = |name: &str, header: Vec<String>, rows: Vec<Vec<String>>| -> Result<()> {
        let p = dir.join(name);
        write_csv(&p, &header, &rows)?;
        out.push(p);
        Ok(())
    };

    emit(
        "label_histogram.csv",
        levels_header(&["alpha", "peak_level"], "level_", r),
        res.alphas
            .iter()
            .map(|a| {
                let mut row = vec![alpha_str(a.alpha), a.peak_level.to_string()];
                row.extend(a.label_histogram.iter().map(|c| c.to_string()));
                row
            })
            .collect(),
    )?;

    let mut rows = Vec::new();
    for a in &res.alphas {
        let s = &a.summary;
        let peak = a.peak_level.to_string();
        for (what, level, d, t) in [
            ("selected", String::new(), s.selected_dice, s.selected_time),
            ("peak", peak, s.peak_dice, s.peak_time),
            ("original", "0".into(), s.original_dice, s.original_time),
            ("minimum", (r - 1).to_string(), s.minimum_dice, s.minimum_time),
        ] {
            rows.push(vec![alpha_str(a.alpha), what.into(), level, num(d.mean), num(d.std), num(t.mean), num(t.std)]);
        }
    }
    emit(
        "resolution_summary.csv",
        h(&["alpha", "resolution", "level", "dice_mean", "dice_std", "time_mean", "time_std"]),
        rows,
    )?;

    emit(
        "f1.csv",
        levels_header(&["alpha", "learner"], "f1_level_", r),
        each_learner(res)
            .map(|(a, l)| {
                let mut row = vec![alpha_str(a.alpha), l.learner.clone()];
                row.extend(l.f1.iter().map(|&v| opt(v)));
                row
            })
            .collect(),
    )?;

    let mut rows = Vec::new();
    for (a, l) in each_learner(res) {
        for (rep, f1) in l.f1_per_repeat.iter().enumerate() {
            let mut row = vec![alpha_str(a.alpha), l.learner.clone(), rep.to_string()];
            row.extend(f1.iter().map(|&v| opt(v)));
            rows.push(row);
        }
    }
    emit("f1_per_repeat.csv", levels_header(&["alpha", "learner", "repeat"], "f1_level_", r), rows)?;

    emit(
        "metrics.csv",
        h(&["alpha", "learner", "accuracy_mean", "accuracy_std", "g_mean_mean", "g_mean_std"]),
        each_learner(res)
            .map(|(a, l)| {
                vec![
                    alpha_str(a.alpha),
                    l.learner.clone(),
                    num(l.accuracy.mean),
                    num(l.accuracy.std),
                    num(l.g_mean.mean),
                    num(l.g_mean.std),
                ]
            })
            .collect(),
    )?;

    let mut rows = Vec::new();
    for (a, l) in each_learner(res) {
        for (stat, m) in [("mean", &l.confusion_mean), ("std", &l.confusion_std)] {
            for actual in 0..r {
                let mut row = vec![alpha_str(a.alpha), l.learner.clone(), stat.into(), actual.to_string()];
                row.extend(m[actual * r..(actual + 1) * r].iter().map(|&v| num(v)));
                rows.push(row);
            }
        }
    }
    emit("confusion.csv", levels_header(&["alpha", "learner", "stat", "actual"], "predicted_", r), rows)?;

    for (file, acc) in [("impact_accuracy.csv", true), ("impact_time.csv", false)] {
        let cols = if acc {
            ["est_orig", "est_min", "est_peak", "est_sel"]
        } else {
            ["orig_est", "min_est", "peak_est", "sel_est"]
        };
        let mut header = h(&["alpha", "learner"]);
        header.extend(cols.iter().map(|c| c.to_string()));
        header.extend(cols.iter().map(|c| format!("{c}_median")));
        let rows = each_learner(res)
            .map(|(a, l)| {
                let r = impact_columns(&l.impact, acc);
                let mut row = vec![alpha_str(a.alpha), l.learner.clone()];
                row.extend(r.iter().map(|x| num(x.mean)));
                row.extend(r.iter().map(|x| num(x.median)));
                row
            })
            .collect();
        emit(file, header, rows)?;
    }

    let mut rows = Vec::new();
    for (a, l) in each_learner(res) {
        for (rep, loc) in l.locality.iter().enumerate() {
            rows.push(vec![
                alpha_str(a.alpha),
                l.learner.clone(),
                rep.to_string(),
                loc.misclassified.to_string(),
                loc.within_one.to_string(),
                opt(loc.fraction()),
            ]);
        }
    }
    emit("locality.csv", h(&["alpha", "learner", "repeat", "misclassified", "within_one", "fraction"]), rows)?;

    emit(
        "skipped.csv",
        h(&["image"]),
        res.skipped_images.iter().map(|s| vec![s.clone()]).collect(),
    )?;

    let json = dir.join(RESULT_JSON);
    fs::write(&json, serde_json::to_string_pretty(res)? + "\n").map_err(|e| Error::io(&json, e))?;
    out.push(json);
    let txt = dir.join(REPORT_TXT);
    fs::write(&txt, render_text(res)).map_err(|e| Error::io(&txt, e))?;
    out.push(txt);
    Ok(out)
}

pub fn read_result(path: &Path) -> Result<ExperimentResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Mean locality fraction over repeats that had misclassifications.
pub fn mean_locality(l: &super::LearnerResult) -> Option<f64> {
    let v: Vec<f64> = l.locality.iter().filter_map(|x| x.fraction()).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|s| s.chars().count()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&width).enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "  {c:>w$}");
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut s = line(header);
    s += &(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ") + "\n");
    for r in rows {
        s += &line(r);
    }
    s
}

fn pm(m: MeanStd, decimals: usize) -> String {
    format!("{:.*} ± {:.*}", decimals, m.mean, decimals, m.std)
}

pub fn render_text(res: &ExperimentResult) -> String {
    let r = res.levels;
    let unit = match res.timing {
        TimingMode::Cost => "ops",
        TimingMode::Wall => "s",
    };
    let time_dec = if res.timing == TimingMode::Cost { 0 } else { 4 };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} images, {} levels, {}-fold cross-validation × {} repeats, seed {}",
        res.images, res.levels, res.folds, res.repeats, res.seed
    );
    let _ = writeln!(
        s,
        "time unit: {unit}; estimated-level outcomes {}",
        if res.resegmented {
            "re-measured by segmenting again"
        } else {
            "taken from the labeling runs"
        }
    );
    if !res.skipped_images.is_empty() {
        let _ = writeln!(s, "skipped: {}", res.skipped_images.join(", "));
    }

    s += "\nBest-resolution labels\n";
    let mut hdr = h(&["alpha", "peak"]);
    hdr.extend((0..r).map(|l| format!("L{l}")));
    let rows: Vec<Vec<String>> = res
        .alphas
        .iter()
        .map(|a| {
            let mut row = vec![alpha_str(a.alpha), a.peak_level.to_string()];
            row.extend(a.label_histogram.iter().map(|c| c.to_string()));
            row
        })
        .collect();
    s += &table(&hdr, &rows);

    s += "\nAccuracy (Dice) and time at the selected and peak resolutions\n";
    let hdr = h(&["alpha", "Dice sel", "Dice peak", &format!("time sel ({unit})"), &format!("time peak ({unit})")]);
    let mut rows: Vec<Vec<String>> = res
        .alphas
        .iter()
        .map(|a| {
            let m = &a.summary;
            vec![
                alpha_str(a.alpha),
                pm(m.selected_dice, 3),
                pm(m.peak_dice, 3),
                pm(m.selected_time, time_dec),
                pm(m.peak_time, time_dec),
            ]
        })
        .collect();
    if let Some(a) = res.alphas.first() {
        let m = &a.summary;
        rows.push(vec!["original".into(), pm(m.original_dice, 3), String::new(), pm(m.original_time, time_dec), String::new()]);
        rows.push(vec!["minimum".into(), pm(m.minimum_dice, 3), String::new(), pm(m.minimum_time, time_dec), String::new()]);
    }
    s += &table(&hdr, &rows);

    for (title, acc) in [
        ("Accuracy ratios, mean of per-image ratios (median)", true),
        ("Time ratios, mean of per-image ratios (median)", false),
    ] {
        let _ = writeln!(s, "\n{title}");
        let hdr = if acc {
            h(&["alpha", "learner", "Est/Orig", "Est/Min", "Est/Peak", "Est/Sel"])
        } else {
            h(&["alpha", "learner", "Orig/Est", "Min/Est", "Peak/Est", "Sel/Est"])
        };
        let rows: Vec<Vec<String>> = each_learner(res)
            .map(|(a, l)| {
                let mut row = vec![alpha_str(a.alpha), l.learner.clone()];
                row.extend(impact_columns(&l.impact, acc).iter().map(|c| {
                    if c.mean.is_nan() {
                        "---".into()
                    } else {
                        format!("{:.2} ({:.2})", c.mean, c.median)
                    }
                }));
                row
            })
            .collect();
        s += &table(&hdr, &rows);
    }

    s += "\nPer-class F1 (--- : class absent)\n";
    let mut hdr = h(&["alpha", "learner"]);
    hdr.extend((0..r).map(|l| format!("L{l}")));
    hdr.extend(h(&["accuracy", "G-mean", "±1 level"]));
    let rows: Vec<Vec<String>> = each_learner(res)
        .map(|(a, l)| {
            let mut row = vec![alpha_str(a.alpha), l.learner.clone()];
            row.extend(l.f1.iter().map(|v| v.map_or_else(|| "---".into(), |x| format!("{x:.2}"))));
            row.push(pm(l.accuracy, 3));
            row.push(pm(l.g_mean, 3));
            row.push(mean_locality(l).map_or_else(|| "---".into(), |x| format!("{:.0}%", 100.0 * x)));
            row
        })
        .collect();
    s += &table(&hdr, &rows);

    for (a, l) in each_learner(res) {
        let _ = writeln!(s, "\nConfusion matrix, alpha {}, {} (mean ± std over repeats)", alpha_str(a.alpha), l.learner);
        let mut hdr = vec!["actual".to_string()];
        hdr.extend((0..r).map(|p| format!("L{p}")));
        let rows: Vec<Vec<String>> = (0..r)
            .map(|i| {
                let mut row = vec![format!("L{i}")];
                row.extend((0..r).map(|j| {
                    format!("{} ± {}", l.confusion_mean[i * r + j].round(), l.confusion_std[i * r + j].round())
                }));
                row
            })
            .collect();
        s += &table(&hdr, &rows);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;
    use crate::harness::label::{LabeledCorpus, LabeledImage, LevelRun};
    use crate::harness::run_experiment;

    fn labeled(n: usize, levels: usize) -> LabeledCorpus {
        LabeledCorpus {
            levels,
            images: (0..n)
                .map(|i| {
                    let best = i % levels;
                    LabeledImage {
                        name: format!("im{i}"),
                        index: i,
                        runs: (0..levels)
                            .map(|l| LevelRun {
                                dice: if l <= best { 0.9 } else { 0.2 },
                                time: (4096 >> (2 * l)) as f64,
                                cost: 4096 >> (2 * l),
                            })
                            .collect(),
                        features: vec![best as f64 + 0.1 * (i % 3) as f64, (i % 4) as f64],
                    }
                })
                .collect(),
            failures: vec![],
        }
    }

    fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
        let mut r = csv::Reader::from_path(path).unwrap();
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let body = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
        (header, body)
    }

    #[test]
    fn structural_counts() {
        let mut cfg = ExperimentConfig::default();
        cfg.levels = 3;
        cfg.folds = 2;
        cfg.repeats = 1;
        cfg.alphas = vec![0.3, 0.7];
        let res = run_experiment(&cfg, &labeled(16, 3), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(dir.path(), &res).unwrap();
        assert!(files.iter().all(|f| f.exists()));

        let (hdr, body) = rows(&dir.path().join("f1.csv"));
        assert_eq!(hdr.len(), 2 + 3);
        assert_eq!(body.len(), 2 * 2);
        let (hdr, body) = rows(&dir.path().join("confusion.csv"));
        assert_eq!(hdr.len(), 4 + 3);
        assert_eq!(body.len(), 2 * 2 * 2 * 3);
        let (_, body) = rows(&dir.path().join("resolution_summary.csv"));
        assert_eq!(body.len(), 2 * 4);
        let (hdr, body) = rows(&dir.path().join("impact_time.csv"));
        assert_eq!((hdr.len(), body.len()), (10, 4));
        let (_, body) = rows(&dir.path().join("locality.csv"));
        assert_eq!(body.len(), 4);
        let (_, body) = rows(&dir.path().join("label_histogram.csv"));
        assert_eq!(body[0][2..].iter().map(|c| c.parse::<usize>().unwrap()).sum::<usize>(), 16);

        let back = read_result(&dir.path().join(RESULT_JSON)).unwrap();
        assert_eq!(back, res);
        let again = tempfile::tempdir().unwrap();
        write_report(again.path(), &back).unwrap();
        for f in &files {
            let name = f.file_name().unwrap();
            assert_eq!(fs::read(f).unwrap(), fs::read(again.path().join(name)).unwrap(), "{name:?}");
        }
    }

    #[test]
    fn text_marks_absent_classes() {
        let mut cfg = ExperimentConfig::default();
        cfg.levels = 4;
        cfg.folds = 2;
        cfg.repeats = 1;
        cfg.alphas = vec![0.5];
        // only classes 0..2 ever occur
        let mut l = labeled(12, 3);
        l.levels = 4;
        for im in &mut l.images {
            let last = im.runs[2];
            im.runs.push(LevelRun { dice: 0.0, ..last });
        }
        let res = run_experiment(&cfg, &l, None).unwrap();
        let text = render_text(&res);
        assert!(text.contains("---"));
        assert!(text.contains("Orig/Est"));
    }

    #[test]
    fn number_format() {
        assert_eq!(num(1.0 / 3.0), "0.333333");
        assert_eq!(num(f64::NAN), "NA");
        assert_eq!(opt(None), "NA");
    }
}
