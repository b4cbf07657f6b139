//! Column tables written as CSV with round-trippable doubles.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const TRAJECTORY: &str = "t,x,y,z,vx,vy,vz";
pub const RELATIVISTIC: &str = "t,x,y,z,vx,vy,vz,gamma";
pub const SPECTRUM: &str = "omega,intensity,re_sx,im_sx,re_sy,im_sy,re_sz,im_sz";
pub const LINESHAPE: &str = "omega,intensity,re_f,im_f";
pub const SPLITTING: &str = "t,err_zassenhaus,err_symmetric";
pub const VELOCITY: &str = "t,vx,vy,vz";
pub const MAGNETISATION: &str = "t,mx,my,mz";
pub const VELOCITY_ACCELERATION: &str = "t,vx,vy,vz,ax,ay,az";

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: &'static str,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &'static str) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn columns(&self) -> usize {
        self.header.split(',').count()
    }
}

/// 17 significant digits.
pub fn format_row(row: &[f64]) -> String {
    row.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",")
}

pub fn write_csv(path: &Path, table: &Table) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", table.header)?;
    for row in &table.rows {
        debug_assert_eq!(row.len(), table.columns());
        writeln!(w, "{}", format_row(row))?;
    }
    w.flush()
}
