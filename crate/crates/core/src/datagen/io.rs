//! Trajectory CSV files and the dataset manifest.
//!
//! One CSV per trajectory with header `t,<state names...>,<control names...>`
//! (plus any per-trajectory boundary inputs as trailing constant columns);
//! the manifest lists files, split labels, ranges, and the dataset seed.

use super::{Dataset, DatagenError, Trajectory};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema: u32,
    model: String,
    seed: u64,
    state_names: Vec<String>,
    control_names: Vec<String>,
    extra_names: Vec<String>,
    bounds: Vec<(f64, f64)>,
    provenance: serde_json::Value,
    trajectories: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    file: String,
    split: String,
    initial: Vec<f64>,
    controls: Vec<f64>,
    extras: Vec<f64>,
    truncated: bool,
}

fn fmt_f64(v: f64) -> String {
    // 17 significant digits round-trips every finite f64.
    format!("{v:.16e}")
}

fn trajectory_csv(traj: &Trajectory, header: &str, n_states: usize) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        let mut row = fmt_f64(*t);
        for s in 0..n_states {
            let _ = write!(row, ",{}", fmt_f64(traj.states[k][s]));
        }
        for c in &traj.controls {
            let _ = write!(row, ",{}", fmt_f64(*c));
        }
        for e in &traj.extras {
            let _ = write!(row, ",{}", fmt_f64(*e));
        }
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// Writes all trajectories plus `manifest.json` under `dir`.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<(), DatagenError> {
    std::fs::create_dir_all(dir)?;
    let header = {
        let mut h = String::from("t");
        for n in ds
            .state_names
            .iter()
            .chain(&ds.control_names)
            .chain(&ds.extra_names)
        {
            let _ = write!(h, ",{n}");
        }
        h
    };
    let n_states = ds.state_names.len();
    let mut entries = Vec::new();
    for (split, trajs) in [("train", &ds.train), ("test", &ds.test)] {
        for (i, traj) in trajs.iter().enumerate() {
            let file = format!("{split}_{i:03}.csv");
            std::fs::write(dir.join(&file), trajectory_csv(traj, &header, n_states))?;
            entries.push(ManifestEntry {
                file,
                split: split.to_string(),
                initial: traj.initial.clone(),
                controls: traj.controls.clone(),
                extras: traj.extras.clone(),
                truncated: traj.truncated,
            });
        }
    }
    let manifest = Manifest {
        schema: 1,
        model: ds.model.clone(),
        seed: ds.seed,
        state_names: ds.state_names.clone(),
        control_names: ds.control_names.clone(),
        extra_names: ds.extra_names.clone(),
        bounds: ds.bounds.clone(),
        provenance: ds.provenance.clone(),
        trajectories: entries,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).map_err(|e| DatagenError::Parse(e.to_string()))?,
    )?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset, DatagenError> {
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)
            .map_err(|e| DatagenError::Parse(e.to_string()))?;
    let n_states = manifest.state_names.len();
    let n_controls = manifest.control_names.len();
    let n_extras = manifest.extra_names.len();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for entry in &manifest.trajectories {
        let text = std::fs::read_to_string(dir.join(&entry.file))?;
        let mut lines = text.lines();
        let _header = lines.next().ok_or_else(|| {
            DatagenError::Parse(format!("{}: empty trajectory file", entry.file))
        })?;
        let mut times = Vec::new();
        let mut states = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| DatagenError::Parse(format!("{}: {e}", entry.file)))?;
            if vals.len() != 1 + n_states + n_controls + n_extras {
                return Err(DatagenError::Parse(format!(
                    "{}: expected {} columns, got {}",
                    entry.file,
                    1 + n_states + n_controls + n_extras,
                    vals.len()
                )));
            }
            times.push(vals[0]);
            states.push(vals[1..1 + n_states].to_vec());
        }
        let traj = Trajectory {
            times,
            states,
            controls: entry.controls.clone(),
            extras: entry.extras.clone(),
            initial: entry.initial.clone(),
            truncated: entry.truncated,
        };
        match entry.split.as_str() {
            "train" => train.push(traj),
            "test" => test.push(traj),
            other => return Err(DatagenError::Parse(format!("unknown split '{other}'"))),
        }
    }
    Ok(Dataset {
        model: manifest.model,
        state_names: manifest.state_names,
        control_names: manifest.control_names,
        extra_names: manifest.extra_names,
        seed: manifest.seed,
        bounds: manifest.bounds,
        train,
        test,
        provenance: manifest.provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_roundtrip_is_bit_exact() {
        let traj = Trajectory {
            times: vec![0.0, 0.1, 0.2],
            states: vec![
                vec![1.0, 0.123456789012345678],
                vec![0.9, std::f64::consts::PI],
                vec![0.8, 1e-17],
            ],
            controls: vec![3.31],
            extras: vec![0.0383],
            initial: vec![1.0, 0.123456789012345678],
            truncated: false,
        };
        let ds = Dataset {
            model: "demo".into(),
            state_names: vec!["a".into(), "b".into()],
            control_names: vec!["u".into()],
            extra_names: vec!["rv".into()],
            seed: 5,
            bounds: vec![(0.0, 1.0)],
            train: vec![traj.clone()],
            test: vec![traj],
            provenance: serde_json::json!({"p": 1.5}),
        };
        let dir = std::env::temp_dir().join("pinndae-io-test");
        let _ = std::fs::remove_dir_all(&dir);
        write_dataset(&dir, &ds).unwrap();
        let back = load_dataset(&dir).unwrap();
        assert_eq!(back.train.len(), 1);
        for (a, b) in ds.train[0].states.iter().zip(&back.train[0].states) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(back.test[0].controls, vec![3.31]);
    }
}
