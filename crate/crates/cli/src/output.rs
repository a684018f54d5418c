//! CSV rows, lattice dumps and number formatting.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use cy_core::ChungYaoLattice;

use crate::CliError;

/// 17 significant digits, enough to round-trip any double.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{}", v + 0.0)).collect();
    format!("({})", parts.join(", "))
}

pub fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// One line of the convergence CSV; columns are fixed and ordered.
#[derive(Debug, Serialize)]
pub struct ResultRow {
    pub s: u64,
    pub t: String,
    pub lattice_norm: String,
    pub min_volume: String,
    pub max_offset: String,
    pub sup_error: String,
    pub coeff_error: String,
    pub bound: String,
    pub c2: &'static str,
    pub offset_le_norm: &'static str,
    pub hypotheses: &'static str,
    pub bound_holds: &'static str,
}

pub fn flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "n/a",
    }
}

pub fn write_csv(rows: &[ResultRow], out: &mut dyn Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

#[derive(Debug, Serialize)]
pub struct VertexDump {
    pub subset: Vec<usize>,
    pub point: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct LineDump {
    pub k: Vec<usize>,
    pub n_k: Vec<f64>,
    pub vertex_subsets: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize)]
pub struct CertificateDump {
    pub min_abs_det: f64,
    pub min_det_subset: Vec<usize>,
    pub min_vertex_distance: f64,
    pub diameter: f64,
}

#[derive(Debug, Serialize)]
pub struct LatticeDump {
    pub s: u64,
    pub dimension: usize,
    pub hyperplanes: usize,
    pub degree: usize,
    pub norm: f64,
    pub vertices: Vec<VertexDump>,
    pub lines: Vec<LineDump>,
    pub certificate: CertificateDump,
}

impl LatticeDump {
    pub fn new(lattice: &ChungYaoLattice, s: u64) -> Result<Self, CliError> {
        let fam = lattice.family();
        let cert = fam.certificate();
        Ok(LatticeDump {
            s,
            dimension: lattice.dim(),
            hyperplanes: fam.len(),
            degree: lattice.degree(),
            norm: lattice.norm(),
            vertices: lattice
                .iter()
                .map(|(h, p)| VertexDump {
                    subset: h.clone(),
                    point: p.clone(),
                })
                .collect(),
            lines: lattice
                .line_subsets()?
                .into_iter()
                .map(|l| LineDump {
                    k: l.k,
                    n_k: l.direction,
                    vertex_subsets: l.vertex_subsets,
                })
                .collect(),
            certificate: CertificateDump {
                min_abs_det: cert.min_abs_det,
                min_det_subset: cert.min_det_subset.clone(),
                min_vertex_distance: cert.min_vertex_distance,
                diameter: cert.diameter,
            },
        })
    }

    pub fn print(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(
            out,
            "lattice at s = {}: N = {}, d = {}, degree {}, norm {}",
            self.s, self.dimension, self.hyperplanes, self.degree, self.norm
        )?;
        writeln!(out, "vertices ({}):", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(out, "  H = {:?}  theta = {}", v.subset, point(&v.point))?;
        }
        writeln!(out, "lines ({}):", self.lines.len())?;
        for l in &self.lines {
            writeln!(out, "  K = {:?}  n_K = {}  vertices {:?}", l.k, point(&l.n_k), l.vertex_subsets)?;
        }
        let c = &self.certificate;
        writeln!(
            out,
            "certificate: min |det| {} at {:?}, min vertex distance {}, diameter {}",
            c.min_abs_det, c.min_det_subset, c.min_vertex_distance, c.diameter
        )
    }
}
