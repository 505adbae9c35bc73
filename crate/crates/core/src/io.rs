//! CSV formats for trajectories, clouds and piecewise trajectories, plus
//! atomic file output.
//!
//! A trajectory file has the header `t,q_1..q_n,v_1..v_n,a_1..a_n,j_1..j_n`
//! and one row per sample, every value written with 17 significant digits.
//! The piecewise format prepends `piece_id` and `vertex` columns. Cloud files
//! hold one point per row with no header.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::avoidance::ObstacleCloud;
use crate::error::{Error, Result};
use crate::hybrid::HybridTrajectory;
use crate::integrator::{JetState, Trajectory};
use crate::manifold::Vector;

fn header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for level in ["q", "v", "a", "j"] {
        h.extend((1..=n).map(|i| format!("{level}_{i}")));
    }
    h
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(t: f64, s: &JetState) -> Vec<String> {
    std::iter::once(t).chain(s.to_row()).map(fmt).collect()
}

pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(traj.dim()))?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        out.write_record(row(*t, s))?;
    }
    out.flush()?;
    Ok(())
}

pub fn trajectory_to_string(traj: &Trajectory) -> Result<String> {
    let mut buf = Vec::new();
    write_trajectory(&mut buf, traj)?;
    Ok(String::from_utf8(buf).expect("csv output is ASCII"))
}

/// Parses a trajectory file; `chart` labels the result.
pub fn read_trajectory<R: Read>(r: R, chart: &str) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(r);
    let cols = rdr.headers()?.len();
    if cols < 5 || (cols - 1) % 4 != 0 {
        return Err(Error::validation(format!("trajectory header has {cols} columns, expected 1 + 4n")));
    }
    let n = (cols - 1) / 4;
    if rdr.headers()?.iter().map(str::trim).ne(header(n).iter().map(String::as_str)) {
        return Err(Error::validation("trajectory header does not match t,q_*,v_*,a_*,j_*"));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let values = rec
            .iter()
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::validation(format!("trajectory row {}: {e}", line + 1)))?;
        if values.len() != cols {
            return Err(Error::validation(format!("trajectory row {} has {} values", line + 1, values.len())));
        }
        times.push(values[0]);
        states.push(JetState::from_row(&values[1..])?);
    }
    Trajectory::new(chart, times, states)
}

pub fn load_trajectory(path: &Path, chart: &str) -> Result<Trajectory> {
    read_trajectory(fs::File::open(path).map_err(|e| io_context(path, e))?, chart)
}

pub fn read_cloud<R: Read>(r: R) -> Result<ObstacleCloud> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let values = rec
            .iter()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::validation(format!("cloud row {}: {e}", line + 1)))?;
        points.push(Vector::from_vec(values));
    }
    ObstacleCloud::new(points)
}

pub fn load_cloud(path: &Path) -> Result<ObstacleCloud> {
    read_cloud(fs::File::open(path).map_err(|e| io_context(path, e))?)
}

pub fn write_cloud<W: Write>(w: W, points: &[Vector]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.write_record(p.iter().map(|x| fmt(*x)))?;
    }
    out.flush()?;
    Ok(())
}

/// Piecewise trajectory with `piece_id` and `vertex` columns. Pieces may
/// live on charts of different dimension; shorter rows are padded with empty fields.
pub fn write_hybrid<W: Write>(w: W, traj: &HybridTrajectory) -> Result<()> {
    let n = traj.pieces.iter().map(|p| p.trajectory.dim()).max().unwrap_or(0);
    let mut out = csv::Writer::from_writer(w);
    let mut head = vec!["piece_id".to_string(), "vertex".to_string()];
    head.extend(header(n));
    out.write_record(&head)?;
    for (id, piece) in traj.pieces.iter().enumerate() {
        let m = piece.trajectory.dim();
        for (t, s) in piece.trajectory.times.iter().zip(&piece.trajectory.states) {
            let mut rec = vec![id.to_string(), piece.vertex.clone(), fmt(*t)];
            for level in [&s.q, &s.v, &s.a, &s.j] {
                rec.extend(level.iter().map(|x| fmt(*x)));
                rec.extend(std::iter::repeat(String::new()).take(n - m));
            }
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn io_context(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Writes `contents` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_context(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_context(dir, e))?;
    tmp.write_all(contents).map_err(|e| io_context(path, e))?;
    tmp.flush().map_err(|e| io_context(path, e))?;
    tmp.persist(path).map_err(|e| io_context(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, Method};
    use crate::manifold::EuclideanChart;
    use crate::potential::PotentialSum;

    #[test]
    fn trajectory_round_trip_is_exact() {
        let chart = EuclideanChart::new(2).unwrap();
        let s0 = JetState::new(
            Vector::from_row_slice(&[0.1, -0.2]),
            Vector::from_row_slice(&[1.0 / 3.0, 0.7]),
            Vector::from_row_slice(&[-0.4, 0.3]),
            Vector::from_row_slice(&[2.0, -1.0]),
        );
        let traj = integrate(&chart, &PotentialSum::zero(), &s0, 1.0, 0.1, Method::Rk4).unwrap();
        let text = trajectory_to_string(&traj).unwrap();
        assert!(text.starts_with("t,q_1,q_2,v_1,v_2,a_1,a_2,j_1,j_2\n"));
        let back = read_trajectory(text.as_bytes(), &traj.chart).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn bad_header_rejected() {
        let text = "t,x,y\n0,1,2\n";
        assert!(read_trajectory(text.as_bytes(), "euclidean:1").is_err());
    }

    #[test]
    fn cloud_parsing() {
        let cloud = read_cloud("0.0, 1.0\n\n2.5,-1\n".as_bytes()).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.points[1], Vector::from_row_slice(&[2.5, -1.0]));
        assert!(read_cloud("".as_bytes()).is_err());
        assert!(read_cloud("1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
