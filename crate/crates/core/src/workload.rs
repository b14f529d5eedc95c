//! Request sequences: seeded synthetic generators and a CSV trace reader.
//!
//! Trace files have a header `t,b_1,...,b_N` and one row per slot with
//! 1-based values. Rows are read in file order; the `t` column must count
//! up from 1.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JobRequest, NetworkConfig, Reservation, ReservationSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WorkloadKind {
    /// Every coordinate uniform on `1..=m_n`, independently per slot.
    IidUniform,
    /// Cycles through `pattern`; the period is its length.
    Periodic { pattern: Vec<Vec<u32>> },
    /// The first `⌈duty · period⌉` slots of every period are bursts, where
    /// coordinates are uniform on `⌈height · m_n⌉..=m_n`; the other slots
    /// draw from `1..=max(1, ⌈(1 - height) · m_n⌉)`.
    Bursty { period: usize, duty: f64, height: f64 },
    Trace { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    #[serde(flatten)]
    pub kind: WorkloadKind,
    #[serde(default)]
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn iid_uniform(seed: u64) -> Self {
        WorkloadSpec {
            kind: WorkloadKind::IidUniform,
            seed,
        }
    }

    pub fn periodic(pattern: Vec<Vec<u32>>) -> Self {
        WorkloadSpec {
            kind: WorkloadKind::Periodic { pattern },
            seed: 0,
        }
    }

    pub fn trace(path: impl Into<PathBuf>) -> Self {
        WorkloadSpec {
            kind: WorkloadKind::Trace { path: path.into() },
            seed: 0,
        }
    }

    /// Same spec with the seed shifted by `offset`.
    pub fn offset_seed(&self, offset: u64) -> Self {
        WorkloadSpec {
            kind: self.kind.clone(),
            seed: self.seed.wrapping_add(offset),
        }
    }

    /// Resolves a relative trace path against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let WorkloadKind::Trace { path } = &mut self.kind {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

fn uniform_request(rng: &mut ChaCha8Rng, low: &[u32], high: &[u32]) -> JobRequest {
    Reservation::new(
        low.iter()
            .zip(high)
            .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
            .collect(),
    )
}

fn bursty_bounds(caps: &[u32], height: f64) -> (Vec<u32>, Vec<u32>) {
    let burst_low = caps
        .iter()
        .map(|&m| ((height * m as f64).ceil() as u32).clamp(1, m))
        .collect();
    let quiet_high = caps
        .iter()
        .map(|&m| (((1.0 - height) * m as f64).ceil() as u32).clamp(1, m))
        .collect();
    (burst_low, quiet_high)
}

/// Length-`T` request sequence, deterministic in `(spec, config, T)`.
pub fn generate(spec: &WorkloadSpec, config: &NetworkConfig, horizon: usize) -> Result<Vec<JobRequest>> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    config.validate()?;
    let caps = config.capacities();
    let ones = vec![1u32; caps.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match &spec.kind {
        WorkloadKind::IidUniform => Ok((0..horizon).map(|_| uniform_request(&mut rng, &ones, &caps)).collect()),
        WorkloadKind::Periodic { pattern } => {
            if pattern.is_empty() {
                return Err(Error::InvalidParameter("periodic pattern is empty".into()));
            }
            let space = ReservationSpace::from_capacities(&caps, usize::MAX)?;
            let pattern: Vec<JobRequest> = pattern.iter().map(|b| Reservation::new(b.clone())).collect();
            for b in &pattern {
                space.check(b)?;
            }
            Ok((0..horizon).map(|t| pattern[t % pattern.len()].clone()).collect())
        }
        WorkloadKind::Bursty { period, duty, height } => {
            if *period == 0 || !(0.0..=1.0).contains(duty) || !(0.0..=1.0).contains(height) {
                return Err(Error::InvalidParameter(format!(
                    "bursty needs period ≥ 1 and duty, height in [0, 1]; got period={period}, duty={duty}, height={height}"
                )));
            }
            let burst_len = (duty * *period as f64).ceil() as usize;
            let (burst_low, quiet_high) = bursty_bounds(&caps, *height);
            Ok((0..horizon)
                .map(|t| {
                    if t % period < burst_len {
                        uniform_request(&mut rng, &burst_low, &caps)
                    } else {
                        uniform_request(&mut rng, &ones, &quiet_high)
                    }
                })
                .collect())
        }
        WorkloadKind::Trace { path } => {
            let requests = read_trace(path, &caps)?;
            if requests.len() < horizon {
                return Err(Error::Trace {
                    path: path.clone(),
                    line: requests.len() as u64 + 1,
                    reason: format!("trace has {} slots, horizon needs {horizon}", requests.len()),
                });
            }
            Ok(requests.into_iter().take(horizon).collect())
        }
    }
}

/// Flat indices of a request sequence.
pub fn to_indices(space: &ReservationSpace, requests: &[JobRequest]) -> Result<Vec<usize>> {
    requests.iter().map(|b| space.index_of(b)).collect()
}

/// Reads a trace and checks every row against `capacities`.
pub fn read_trace(path: &Path, capacities: &[u32]) -> Result<Vec<JobRequest>> {
    let trace_err = |line: u64, reason: String| Error::Trace {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let file = File::open(path).map_err(|e| trace_err(0, e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);

    let header = reader.headers().map_err(|e| trace_err(1, e.to_string()))?.clone();
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=capacities.len()).map(|n| format!("b_{n}")))
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(trace_err(1, format!("header must be {}", expected.join(","))));
    }

    let mut requests = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            trace_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let t: u64 = record[0]
            .parse()
            .map_err(|_| trace_err(line, format!("bad slot number {:?}", &record[0])))?;
        if t != requests.len() as u64 + 1 {
            return Err(trace_err(line, format!("expected slot {}, found {t}", requests.len() + 1)));
        }
        let mut values = Vec::with_capacity(capacities.len());
        for (n, field) in record.iter().skip(1).enumerate() {
            let b: u32 = field
                .parse()
                .map_err(|_| trace_err(line, format!("b_{} is not a positive integer: {field:?}", n + 1)))?;
            if b < 1 || b > capacities[n] {
                return Err(trace_err(
                    line,
                    format!("b_{} = {b} outside 1..={}", n + 1, capacities[n]),
                ));
            }
            values.push(b);
        }
        requests.push(Reservation::new(values));
    }
    Ok(requests)
}

pub fn write_trace(path: &Path, requests: &[JobRequest]) -> Result<()> {
    let servers = requests.first().map_or(0, Reservation::len);
    let mut out = Vec::new();
    {
        let mut writer = csv::Writer::from_writer(&mut out);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=servers).map(|n| format!("b_{n}")))
            .collect();
        writer.write_record(&header)?;
        for (t, b) in requests.iter().enumerate() {
            if b.len() != servers {
                return Err(Error::LengthMismatch {
                    expected: servers,
                    got: b.len(),
                });
            }
            let row: Vec<String> = std::iter::once((t + 1).to_string())
                .chain(b.values().iter().map(u32::to_string))
                .collect();
            writer.write_record(&row)?;
        }
        writer.flush()?;
    }
    File::create(path)?.write_all(&out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> NetworkConfig {
        NetworkConfig::two_server_example()
    }

    fn check_caps(requests: &[JobRequest], caps: &[u32]) {
        for b in requests {
            assert!(b.values().iter().zip(caps).all(|(&x, &m)| (1..=m).contains(&x)), "{b}");
        }
    }

    #[test]
    fn iid_uniform_is_deterministic() {
        let a = generate(&WorkloadSpec::iid_uniform(42), &example(), 200).unwrap();
        let b = generate(&WorkloadSpec::iid_uniform(42), &example(), 200).unwrap();
        let c = generate(&WorkloadSpec::iid_uniform(43), &example(), 200).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn periodic_alternates() {
        let spec = WorkloadSpec::periodic(vec![vec![1, 1], vec![7, 8]]);
        let seq = generate(&spec, &example(), 5).unwrap();
        let lo = Reservation::new(vec![1, 1]);
        let hi = Reservation::new(vec![7, 8]);
        assert_eq!(seq, vec![lo.clone(), hi.clone(), lo.clone(), hi, lo]);
        let bad = WorkloadSpec::periodic(vec![vec![8, 1]]);
        assert!(generate(&bad, &example(), 3).is_err());
    }

    #[test]
    fn iid_uniform_frequencies_within_five_sigma() {
        let t = 100_000;
        let seq = generate(&WorkloadSpec::iid_uniform(7), &example(), t).unwrap();
        for (n, &m) in [7u32, 8].iter().enumerate() {
            let mut counts = vec![0usize; m as usize];
            for b in &seq {
                counts[b.values()[n] as usize - 1] += 1;
            }
            let p = 1.0 / m as f64;
            let sigma = (t as f64 * p * (1.0 - p)).sqrt();
            for c in counts {
                assert!((c as f64 - t as f64 * p).abs() < 5.0 * sigma);
            }
        }
    }

    #[test]
    fn every_kind_respects_capacities() {
        let cfg = example();
        let caps = cfg.capacities();
        let specs = [
            WorkloadSpec::iid_uniform(1),
            WorkloadSpec::periodic(vec![vec![3, 8], vec![7, 1], vec![2, 2]]),
            WorkloadSpec {
                kind: WorkloadKind::Bursty {
                    period: 50,
                    duty: 0.2,
                    height: 0.8,
                },
                seed: 3,
            },
            WorkloadSpec {
                kind: WorkloadKind::Bursty {
                    period: 1,
                    duty: 0.0,
                    height: 1.0,
                },
                seed: 3,
            },
        ];
        for spec in &specs {
            check_caps(&generate(spec, &cfg, 100_000).unwrap(), &caps);
        }
    }

    #[test]
    fn bursty_bursts_are_high() {
        let spec = WorkloadSpec {
            kind: WorkloadKind::Bursty {
                period: 10,
                duty: 0.3,
                height: 0.8,
            },
            seed: 9,
        };
        let seq = generate(&spec, &example(), 100).unwrap();
        for (t, b) in seq.iter().enumerate() {
            if t % 10 < 3 {
                assert!(b.values()[0] >= 6 && b.values()[1] >= 7, "t={t} {b}");
            } else {
                assert!(b.values()[0] <= 2 && b.values()[1] <= 2, "t={t} {b}");
            }
        }
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let seq = generate(&WorkloadSpec::iid_uniform(5), &example(), 300).unwrap();
        write_trace(&path, &seq).unwrap();
        let back = generate(&WorkloadSpec::trace(&path), &example(), 300).unwrap();
        assert_eq!(seq, back);
        let shorter = generate(&WorkloadSpec::trace(&path), &example(), 10).unwrap();
        assert_eq!(&seq[..10], &shorter[..]);
        assert!(generate(&WorkloadSpec::trace(&path), &example(), 301).is_err());
    }

    #[test]
    fn trace_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let line_of = |body: &str| {
            std::fs::write(&path, body).unwrap();
            match generate(&WorkloadSpec::trace(&path), &example(), 1) {
                Err(Error::Trace { line, .. }) => line,
                other => panic!("expected trace error, got {other:?}"),
            }
        };
        assert_eq!(line_of("t,b_1,b_2\n1,1,1\n2,8,1\n"), 3);
        assert_eq!(line_of("t,b_1,b_2\n1,1,1\n2,1,0\n"), 3);
        assert_eq!(line_of("t,b_1,b_2\n1,x,1\n"), 2);
        assert_eq!(line_of("t,b_1,b_2\n1,1,1\n3,1,1\n"), 3);
        assert_eq!(line_of("t,b1,b2\n1,1,1\n"), 1);
        assert_eq!(line_of("t,b_1,b_2\n1,1,1\n2,1\n"), 3);
    }

    #[test]
    fn spec_json_shape() {
        let spec: WorkloadSpec = serde_json::from_str(r#"{"kind":"iid-uniform","seed":11}"#).unwrap();
        assert_eq!(spec, WorkloadSpec::iid_uniform(11));
        let spec: WorkloadSpec =
            serde_json::from_str(r#"{"kind":"bursty","period":4,"duty":0.5,"height":0.9}"#).unwrap();
        assert_eq!(spec.seed, 0);
        assert_eq!(spec.offset_seed(3).seed, 3);
    }
}
