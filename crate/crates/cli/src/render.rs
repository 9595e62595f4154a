//! Binary PGM renders and CSV tables.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use phaseret::algorithms::TraceRecord;
use phaseret::RealGrid;

/// 8-bit gray levels of an amplitude image, `[0, max] -> [0, 255]`.
pub fn amplitude_levels(a: &RealGrid) -> Vec<u8> {
    let max = a.max();
    a.data()
        .iter()
        .map(|&v| {
            if max > 0.0 {
                (v.max(0.0) / max * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect()
}

/// 8-bit gray levels of a phase image, `(-pi, pi] -> [0, 255]`.
pub fn phase_levels(phi: &RealGrid) -> Vec<u8> {
    phi.data()
        .iter()
        .map(|&p| ((p + PI) / (2.0 * PI) * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}

pub fn encode_pgm(rows: usize, cols: usize, levels: &[u8]) -> Vec<u8> {
    assert_eq!(levels.len(), rows * cols);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend_from_slice(levels);
    out
}

pub fn write_pgm(path: &Path, rows: usize, cols: usize, levels: &[u8]) -> io::Result<()> {
    fs::write(path, encode_pgm(rows, cols, levels))
}

pub fn trace_csv(trace: &[TraceRecord], with_rmse: bool) -> String {
    let mut s = String::new();
    if with_rmse {
        s.push_str("iteration,phase_rmse,amplitude_rmse,objective\n");
    } else {
        s.push_str("iteration,objective\n");
    }
    for t in trace {
        match (with_rmse, t.phase_rmse, t.amplitude_rmse) {
            (true, Some(p), Some(a)) => {
                let _ = writeln!(s, "{},{},{},{}", t.iteration, p, a, t.objective);
            }
            _ => {
                let _ = writeln!(s, "{},{}", t.iteration, t.objective);
            }
        }
    }
    s
}

/// One column per named series, one row per entry; every series must have the
/// same length.
pub fn columns_csv(index_name: &str, series: &[(&str, &[f64])]) -> String {
    let n = series.first().map_or(0, |(_, v)| v.len());
    let mut s = String::from(index_name);
    for (name, values) in series {
        assert_eq!(values.len(), n, "series {name} has the wrong length");
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for i in 0..n {
        let _ = write!(s, "{i}");
        for (_, values) in series {
            let _ = write!(s, ",{}", values[i]);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header() {
        let b = encode_pgm(2, 3, &[0, 1, 2, 3, 4, 5]);
        assert_eq!(&b[..11], b"P5\n3 2\n255\n");
        assert_eq!(b.len(), 11 + 6);
    }

    #[test]
    fn level_maps() {
        let a = RealGrid::new(1, 3, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(amplitude_levels(&a), vec![0, 128, 255]);
        let z = RealGrid::filled(1, 2, 0.0).unwrap();
        assert_eq!(amplitude_levels(&z), vec![0, 0]);
        let p = RealGrid::new(1, 3, vec![-PI / 2.0, 0.0, PI]).unwrap();
        assert_eq!(phase_levels(&p), vec![64, 128, 255]);
    }

    #[test]
    fn trace_headers() {
        let t = [TraceRecord {
            iteration: 0,
            phase_rmse: Some(0.5),
            amplitude_rmse: Some(0.25),
            objective: 2.0,
        }];
        assert_eq!(
            trace_csv(&t, true),
            "iteration,phase_rmse,amplitude_rmse,objective\n0,0.5,0.25,2\n"
        );
        assert_eq!(trace_csv(&t, false), "iteration,objective\n0,2\n");
    }

    #[test]
    fn columns() {
        let csv = columns_csv("col", &[("a", &[1.0, 2.0]), ("b", &[3.0, 4.5])]);
        assert_eq!(csv, "col,a,b\n0,1,3\n1,2,4.5\n");
    }
}
