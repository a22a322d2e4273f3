//! Grid files: a first line `MOMTOMO-GRID <version> <header bytes>`, a TOML
//! header naming the arrays and embedding the run config, then the arrays
//! as little-endian f64 in row-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::config::{DomainConfig, RunConfig};
use crate::fields::FieldPair;
use crate::forward::{Attenuation, MomentSinogram};
use crate::geometry::Mesh;
use crate::{Error, Result};

const MAGIC: &str = "MOMTOMO-GRID";
const VERSION: u32 = 1;

const FIELD_NAMES: [&str; 5] = ["f1", "f2", "F11", "F12", "F22"];
const MOMENT_NAMES: [&str; 3] = ["M0", "M1", "M2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    /// `fields`, `attenuation` or `sinogram`.
    pub kind: String,
    pub resolution: usize,
    pub spacing: f64,
    pub origin: f64,
    pub domain: DomainConfig,
    #[serde(default)]
    pub meta: toml::Table,
    pub arrays: Vec<ArrayEntry>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub header: Header,
    pub arrays: Vec<Array2<f64>>,
}

impl GridFile {
    fn new(kind: &str, mesh: &Mesh, config: &RunConfig) -> Self {
        GridFile {
            header: Header {
                kind: kind.into(),
                resolution: mesh.n,
                spacing: mesh.h,
                origin: mesh.origin,
                domain: DomainConfig::of(&mesh.domain),
                meta: toml::Table::new(),
                arrays: Vec::new(),
                config: config.clone(),
            },
            arrays: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, a: ArrayView2<f64>) {
        self.header.arrays.push(ArrayEntry { name: name.into(), rows: a.nrows(), cols: a.ncols() });
        self.arrays.push(a.to_owned());
    }

    pub fn array(&self, name: &str) -> Result<&Array2<f64>> {
        self.header
            .arrays
            .iter()
            .position(|e| e.name == name)
            .map(|i| &self.arrays[i])
            .ok_or_else(|| Error::Format(format!("missing array `{name}`")))
    }

    fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.header.kind != kind {
            return Err(Error::Format(format!("expected a {kind} file, found {}", self.header.kind)));
        }
        Ok(())
    }

    /// Rejects files sampled on a different mesh.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.header.resolution != mesh.n || self.header.domain != DomainConfig::of(&mesh.domain) {
            return Err(Error::config(format!(
                "{} grid is {}×{} on {:?}, expected {}×{} on {:?}",
                self.header.kind,
                self.header.resolution,
                self.header.resolution,
                self.header.domain,
                mesh.n,
                mesh.n,
                DomainConfig::of(&mesh.domain)
            )));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let header = toml::to_string(&self.header).map_err(|e| Error::Format(e.to_string()))?;
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{MAGIC} {VERSION} {}", header.len())?;
        w.write_all(header.as_bytes())?;
        for a in &self.arrays {
            for &v in a.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut first = String::new();
        r.read_line(&mut first)?;
        let mut parts = first.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(Error::Format(format!("{} is not a grid file", path.display())));
        }
        let version: u32 = parse(parts.next())?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported grid version {version}")));
        }
        let len: usize = parse(parts.next())?;
        let mut text = vec![0u8; len];
        r.read_exact(&mut text)?;
        let text = String::from_utf8(text).map_err(|e| Error::Format(e.to_string()))?;
        let header: Header = toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        let mut arrays = Vec::with_capacity(header.arrays.len());
        let mut buf = [0u8; 8];
        for e in &header.arrays {
            let mut data = Vec::with_capacity(e.rows * e.cols);
            for _ in 0..e.rows * e.cols {
                r.read_exact(&mut buf).map_err(|_| Error::Format(format!("array `{}` is truncated", e.name)))?;
                data.push(f64::from_le_bytes(buf));
            }
            arrays.push(Array2::from_shape_vec((e.rows, e.cols), data).map_err(|e| Error::Format(e.to_string()))?);
        }
        if r.read(&mut buf)? != 0 {
            return Err(Error::Format("trailing bytes after the last array".into()));
        }
        Ok(GridFile { header, arrays })
    }
}

fn parse<T: std::str::FromStr>(s: Option<&str>) -> Result<T> {
    s.and_then(|s| s.parse().ok()).ok_or_else(|| Error::Format("bad grid file preamble".into()))
}

pub fn fields_file(fp: &FieldPair, mesh: &Mesh, config: &RunConfig) -> GridFile {
    let mut g = GridFile::new("fields", mesh, config);
    g.header.meta.insert("support_radius".into(), fp.support_radius.into());
    for (name, a) in FIELD_NAMES.iter().zip(fp.grids()) {
        g.push(name, a.view());
    }
    g
}

pub fn read_fields(g: &GridFile, mesh: &Mesh) -> Result<FieldPair> {
    g.expect_kind("fields")?;
    g.check_mesh(mesh)?;
    let rs = g.header.meta.get("support_radius").and_then(|v| v.as_float()).unwrap_or(g.header.config.phantom.support_radius);
    let mut fp = FieldPair::zeros(mesh.n, rs);
    for (name, a) in FIELD_NAMES.iter().zip(fp.grids_mut()) {
        a.assign(g.array(name)?);
    }
    Ok(fp)
}

pub fn attenuation_file(att: &Attenuation, mesh: &Mesh, config: &RunConfig) -> GridFile {
    let mut g = GridFile::new("attenuation", mesh, config);
    g.push("a", att.values.view());
    g
}

pub fn read_attenuation(g: &GridFile, mesh: &Mesh) -> Result<Attenuation> {
    g.expect_kind("attenuation")?;
    g.check_mesh(mesh)?;
    Ok(Attenuation { values: g.array("a")?.clone() })
}

/// Sinogram file; `meta` records the quadrature settings used to produce it.
pub fn sinogram_file(ms: &MomentSinogram, mesh: &Mesh, config: &RunConfig, meta: toml::Table) -> GridFile {
    let mut g = GridFile::new("sinogram", mesh, config);
    g.header.meta = meta;
    for (k, name) in MOMENT_NAMES.iter().enumerate() {
        g.push(name, ms.data.index_axis(ndarray::Axis(0), k));
    }
    g.push("outgoing", ms.outgoing.mapv(|b| if b { 1.0 } else { 0.0 }).view());
    g
}

pub fn read_sinogram(g: &GridFile, mesh: &Mesh) -> Result<MomentSinogram> {
    g.expect_kind("sinogram")?;
    g.check_mesh(mesh)?;
    let m0 = g.array("M0")?;
    let (nb, na) = m0.dim();
    let mut ms = MomentSinogram::zeros(mesh.domain, nb, na);
    for (k, name) in MOMENT_NAMES.iter().enumerate() {
        let a = g.array(name)?;
        if a.dim() != (nb, na) {
            return Err(Error::Format(format!("array `{name}` has shape {:?}, expected {:?}", a.dim(), (nb, na))));
        }
        ms.data.index_axis_mut(ndarray::Axis(0), k).assign(a);
    }
    let stored = g.array("outgoing")?;
    if stored.dim() != (nb, na) || stored.iter().zip(ms.outgoing.iter()).any(|(&s, &o)| (s != 0.0) != o) {
        return Err(Error::Format("outgoing mask disagrees with the domain geometry".into()));
    }
    Ok(ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn fields_round_trip_bit_exact() {
        let mesh = Mesh::new(Domain::unit_disk(), 16).unwrap();
        let mut fp = FieldPair::zeros(16, 0.5);
        fp.f12[[3, 4]] = std::f64::consts::PI;
        fp.f1[[0, 15]] = -1e-300;
        let cfg = RunConfig::default();
        let dir = std::env::temp_dir().join(format!("momtomo-grid-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.grid");
        fields_file(&fp, &mesh, &cfg).write(&path).unwrap();
        let g = GridFile::read(&path).unwrap();
        assert_eq!(g.header.config, cfg);
        assert_eq!(read_fields(&g, &mesh).unwrap(), fp);
        let other = Mesh::new(Domain::unit_disk(), 32).unwrap();
        assert!(matches!(read_fields(&g, &other), Err(Error::Config(_))));
        assert!(matches!(read_attenuation(&g, &mesh), Err(Error::Format(_))));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn garbage_is_rejected() {
        let dir = std::env::temp_dir().join(format!("momtomo-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.grid");
        std::fs::write(&path, "hello\n").unwrap();
        assert!(matches!(GridFile::read(&path), Err(Error::Format(_))));
        std::fs::remove_dir_all(&dir).ok();
    }
}
