use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use lawson_bipolar::export::fmt_f64;
use lawson_bipolar::surface::{bipolar_immersion, ComplementBasis, SurfaceParams};
use serde::Serialize;

use crate::Failure;

pub fn f(x: f64) -> String {
    fmt_f64(x)
}

/// Buffered output, written to the target only once the command succeeded
/// in producing it.
pub struct Output {
    path: Option<PathBuf>,
    buffer: Vec<u8>,
}

impl Output {
    pub fn new(path: Option<PathBuf>) -> Self {
        Self { path, buffer: Vec::new() }
    }

    pub fn line(&mut self, text: impl AsRef<str>) {
        self.buffer.extend_from_slice(text.as_ref().as_bytes());
        self.buffer.push(b'\n');
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, value: &T) {
        let text = serde_json::to_string_pretty(value).expect("report types serialize");
        self.line(text);
    }

    pub fn bytes(&mut self, write: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> io::Result<()> {
        write(&mut self.buffer)
    }

    pub fn finish(self) -> Result<(), Failure> {
        match &self.path {
            Some(path) => {
                let mut file = BufWriter::new(File::create(path)?);
                file.write_all(&self.buffer)?;
                file.flush()?;
            }
            None => match io::stdout().lock().write_all(&self.buffer) {
                // a closed pipe downstream is not an error of ours
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
                other => other?,
            },
        }
        Ok(())
    }
}

/// One row of the rank table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub r: u32,
    pub k: u32,
    pub n: u32,
    pub m: u32,
    pub topology: String,
    pub rank_i: usize,
    pub expected: usize,
    pub formula: &'static str,
    pub multiplicity: usize,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "r,k,n,m,topology,rank_i,expected,formula,multiplicity";

    pub fn new(p: &SurfaceParams, rank_i: usize, multiplicity: usize) -> Self {
        Self {
            r: p.r,
            k: p.k,
            n: p.n,
            m: p.m,
            topology: p.topology.to_string(),
            rank_i,
            expected: p.expected_rank(),
            formula: p.rank_formula(),
            multiplicity,
        }
    }

    pub fn agrees(&self) -> bool {
        self.rank_i == self.expected
    }

    pub fn text(&self) -> String {
        let topology = if self.topology == "Torus" { "torus" } else { "Klein bottle" };
        let verdict = if self.agrees() { self.formula.to_string() } else { format!("expected {} ({})", self.expected, self.formula) };
        format!("i={}, {topology}, {verdict}", self.rank_i)
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.r, self.k, self.n, self.m, self.topology, self.rank_i, self.expected, self.formula, self.multiplicity
        )
    }
}

#[derive(Serialize)]
struct MeshPoint {
    u: f64,
    v: f64,
    coords: [f64; 5],
}

#[derive(Serialize)]
struct Mesh<'a> {
    params: &'a SurfaceParams,
    basis: ComplementBasis,
    points: Vec<MeshPoint>,
}

/// Samples the immersion on `grid × grid` points of `[0, 2π) × [0, π)`.
/// The map is periodic on this rectangle; for odd `rk` it already repeats
/// after `u = π`.
pub fn write_immersion(out: &mut Output, params: &SurfaceParams, grid: usize, json: bool) -> Result<(), Failure> {
    let mut points = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let u = 2.0 * PI * i as f64 / grid as f64;
        for j in 0..grid {
            let v = PI * j as f64 / grid as f64;
            points.push(MeshPoint { u, v, coords: bipolar_immersion(u, v, params).coords });
        }
    }
    if json {
        let mesh = Mesh { params, basis: ComplementBasis::new(params.r, params.k), points };
        out.json(&mesh);
        return Ok(());
    }
    out.line(format!("# r={},k={},n={},m={},topology={}", params.r, params.k, params.n, params.m, params.topology));
    out.line("u,v,x1,x2,x3,x4,x5");
    for p in points {
        let row: Vec<String> = [p.u, p.v].into_iter().chain(p.coords).map(f).collect();
        out.line(row.join(","));
    }
    Ok(())
}
