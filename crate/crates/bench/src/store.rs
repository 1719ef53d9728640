//! Binary instance files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "BKINST01"
//! family     u8       0 lp-ls, 1 lp-ls-eq, 2 lp-loss, 3 nonneg-kl
//! n, m       u64, u64
//! p, theta_p, theta1, density   f64 ×4
//! seed       u64
//! then four arrays in the order A, b, x0, x*, each as
//!   rows u64, cols u64, rows·cols f64 in row-major order
//!   (vectors have cols = 1)
//! ```
//!
//! Loading rebuilds the problem from the stored data, not from the seed.

use std::io::{self, Read, Write};

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::instance::{assemble, Family, Instance, InstanceSpec, SpecError};

pub const MAGIC: &[u8; 8] = b"BKINST01";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not an instance file (bad magic)")]
    Magic,
    #[error("unknown family tag {0}")]
    FamilyTag(u8),
    #[error("array {name} has shape {rows}x{cols}, expected {expected}")]
    Shape { name: &'static str, rows: u64, cols: u64, expected: String },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

fn family_tag(f: Family) -> u8 {
    Family::ALL.iter().position(|&g| g == f).expect("family listed in ALL") as u8
}

fn put_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64(w: &mut impl Write, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn get_f64(r: &mut impl Read) -> io::Result<f64> {
    get_u64(r).map(f64::from_bits)
}

fn put_array<'a>(w: &mut impl Write, rows: usize, cols: usize, data: impl Iterator<Item = &'a f64>) -> io::Result<()> {
    put_u64(w, rows as u64)?;
    put_u64(w, cols as u64)?;
    for &v in data {
        put_f64(w, v)?;
    }
    Ok(())
}

fn get_array(r: &mut impl Read, name: &'static str, rows: usize, cols: usize) -> Result<Vec<f64>, StoreError> {
    let (got_r, got_c) = (get_u64(r)?, get_u64(r)?);
    if (got_r, got_c) != (rows as u64, cols as u64) {
        return Err(StoreError::Shape { name, rows: got_r, cols: got_c, expected: format!("{rows}x{cols}") });
    }
    (0..rows * cols).map(|_| get_f64(r).map_err(StoreError::from)).collect()
}

pub fn write_instance(w: &mut impl Write, inst: &Instance) -> io::Result<()> {
    let s = &inst.spec;
    w.write_all(MAGIC)?;
    w.write_all(&[family_tag(s.family)])?;
    put_u64(w, s.n as u64)?;
    put_u64(w, s.m as u64)?;
    for v in [s.p, s.theta_p, s.theta1, s.density] {
        put_f64(w, v)?;
    }
    put_u64(w, s.seed)?;
    let a = inst.a();
    // `iter()` walks in logical (row-major) order whatever the memory layout.
    put_array(w, s.m, s.n, a.iter())?;
    put_array(w, s.m, 1, inst.b().iter())?;
    put_array(w, s.n, 1, inst.x0.iter())?;
    put_array(w, s.n, 1, inst.x_star.iter())
}

pub fn read_instance(r: &mut impl Read) -> Result<Instance, StoreError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(StoreError::Magic);
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let family = *Family::ALL.get(tag[0] as usize).ok_or(StoreError::FamilyTag(tag[0]))?;
    let n = get_u64(r)? as usize;
    let m = get_u64(r)? as usize;
    let spec = InstanceSpec {
        family,
        n,
        m,
        p: get_f64(r)?,
        theta_p: get_f64(r)?,
        theta1: get_f64(r)?,
        density: get_f64(r)?,
        seed: get_u64(r)?,
    };
    spec.validate()?;
    let a = Array2::from_shape_vec((m, n), get_array(r, "A", m, n)?).expect("length checked");
    let b = Array1::from(get_array(r, "b", m, 1)?);
    let x0 = Array1::from(get_array(r, "x0", n, 1)?);
    let x_star = Array1::from(get_array(r, "x*", n, 1)?);
    Ok(assemble(&spec, a, b, x0, x_star)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_instance;

    #[test]
    fn round_trip_is_bitwise() {
        for family in Family::ALL {
            let inst = gen_instance(&InstanceSpec::new(family, 12, 9, 7)).unwrap();
            let mut buf = Vec::new();
            write_instance(&mut buf, &inst).unwrap();
            assert_eq!(buf.len(), 8 + 1 + 16 + 32 + 8 + 4 * 16 + 8 * (9 * 12 + 9 + 12 + 12));
            let back = read_instance(&mut buf.as_slice()).unwrap();
            assert_eq!(back.spec, inst.spec);
            assert_eq!(back.a(), inst.a());
            assert_eq!(back.b(), inst.b());
            assert_eq!(back.x0, inst.x0);
            assert_eq!(back.x_star, inst.x_star);
            assert_eq!(back.problem.psi_value(back.x0.view()), inst.problem.psi_value(inst.x0.view()));
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let inst = gen_instance(&InstanceSpec::new(Family::LpLs, 4, 3, 1)).unwrap();
        let mut buf = Vec::new();
        write_instance(&mut buf, &inst).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_instance(&mut bad.as_slice()), Err(StoreError::Magic)));
        let mut bad = buf.clone();
        bad[8] = 9;
        assert!(matches!(read_instance(&mut bad.as_slice()), Err(StoreError::FamilyTag(9))));
        assert!(matches!(read_instance(&mut &buf[..buf.len() - 3]), Err(StoreError::Io(_))));
    }
}
