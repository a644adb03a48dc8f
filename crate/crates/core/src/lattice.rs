//! Honeycomb geometry: flakes, periodic supercells and distance shells.
//!
//! Lattice coordinates are in units of the nearest-neighbour distance. The
//! honeycomb is oriented with one bond of every atom vertical, so zigzag
//! chains run along x and are stacked 1.5 units apart in y.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of distance shells kept in pair lists.
pub const SHELL_COUNT: usize = 4;

/// Shell separations in nearest-neighbour units: 1, √3, 2, √7.
pub const SHELL_DISTANCES: [f64; SHELL_COUNT] = [1.0, 1.732_050_807_568_877_2, 2.0, 2.645_751_311_064_590_7];

/// Relative tolerance used when binning pair distances into shells.
pub const SHELL_TOLERANCE: f64 = 1e-6;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Primitive vectors of the honeycomb in this orientation.
pub const PRIMITIVE_A1: [f64; 2] = [SQRT3, 0.0];
pub const PRIMITIVE_A2: [f64; 2] = [SQRT3 / 2.0, 1.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub index: usize,
    pub frac_pos: [f64; 2],
    pub sublattice: Sublattice,
}

/// An unordered site pair (`i < j`) inside one shell.
///
/// `multiplicity` counts the periodic images realising the minimum-image
/// distance; it is always 1 for flakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShellPair {
    pub i: usize,
    pub j: usize,
    pub multiplicity: u32,
}

/// Named flake outlines. All are rectangular cuts of the honeycomb made of
/// `rows` stacked zigzag chains of `cols` atoms each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlakeShape {
    /// 4 chains × 7 atoms.
    Flake28,
    /// 6 chains × 13 atoms.
    Flake78,
    /// A single six-membered ring (2 × 3).
    Hexagon,
    Rect { rows: usize, cols: usize },
}

impl FlakeShape {
    pub fn dims(self) -> (usize, usize) {
        match self {
            FlakeShape::Flake28 => (4, 7),
            FlakeShape::Flake78 => (6, 13),
            FlakeShape::Hexagon => (2, 3),
            FlakeShape::Rect { rows, cols } => (rows, cols),
        }
    }

    pub fn site_count(self) -> usize {
        let (r, c) = self.dims();
        r * c
    }
}

impl FromStr for FlakeShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flake28" => Ok(FlakeShape::Flake28),
            "flake78" => Ok(FlakeShape::Flake78),
            "hexagon" | "ring" => Ok(FlakeShape::Hexagon),
            other => {
                let (r, c) = parse_dims(other)
                    .ok_or_else(|| Error::InvalidLattice(format!("unknown flake shape {s:?}")))?;
                Ok(FlakeShape::Rect { rows: r, cols: c })
            }
        }
    }
}

impl fmt::Display for FlakeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlakeShape::Flake28 => f.write_str("flake28"),
            FlakeShape::Flake78 => f.write_str("flake78"),
            FlakeShape::Hexagon => f.write_str("hexagon"),
            FlakeShape::Rect { rows, cols } => write!(f, "{rows}x{cols}"),
        }
    }
}

fn parse_dims(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once(['x', '×'])?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Either a flake or a periodic supercell, as named on the command line
/// (`flake28`, `4x7`, `supercell:3x3`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeSpec {
    Flake(FlakeShape),
    Supercell { na: usize, nb: usize },
}

impl LatticeSpec {
    pub fn build(self) -> Result<Lattice> {
        match self {
            LatticeSpec::Flake(shape) => build_flake(shape),
            LatticeSpec::Supercell { na, nb } => build_supercell(na, nb),
        }
    }
}

impl FromStr for LatticeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if let Some(rest) = t.strip_prefix("supercell:") {
            let (na, nb) = parse_dims(rest)
                .ok_or_else(|| Error::InvalidLattice(format!("bad supercell dims {rest:?}")))?;
            return Ok(LatticeSpec::Supercell { na, nb });
        }
        Ok(LatticeSpec::Flake(t.parse()?))
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeSpec::Flake(s) => s.fmt(f),
            LatticeSpec::Supercell { na, nb } => write!(f, "supercell:{na}x{nb}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lattice {
    sites: Vec<Site>,
    cell_vectors: Option<[[f64; 2]; 2]>,
    shells: [Vec<ShellPair>; SHELL_COUNT],
}

impl Lattice {
    /// Builds a lattice from explicit positions, classifying pairs into shells.
    pub fn from_sites(
        positions: &[[f64; 2]],
        sublattices: &[Sublattice],
        cell_vectors: Option<[[f64; 2]; 2]>,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidLattice("no sites".into()));
        }
        if positions.len() != sublattices.len() {
            return Err(Error::InvalidLattice("sublattice tags do not match sites".into()));
        }
        if let Some(cell) = cell_vectors {
            if cross(cell[0], cell[1]).abs() < 1e-12 {
                return Err(Error::InvalidLattice("degenerate cell vectors".into()));
            }
        }
        let sites = positions
            .iter()
            .zip(sublattices)
            .enumerate()
            .map(|(index, (&frac_pos, &sublattice))| Site { index, frac_pos, sublattice })
            .collect();
        let mut lattice = Lattice { sites, cell_vectors, shells: Default::default() };
        lattice.classify_shells();
        Ok(lattice)
    }

    fn classify_shells(&mut self) {
        let n = self.sites.len();
        let cutoff = SHELL_DISTANCES[SHELL_COUNT - 1] * (1.0 + SHELL_TOLERANCE);
        for i in 0..n {
            for j in (i + 1)..n {
                let (d, mult) = match self.cell_vectors {
                    None => (norm(sub(self.sites[j].frac_pos, self.sites[i].frac_pos)), 1),
                    Some(cell) => {
                        let delta = sub(self.sites[j].frac_pos, self.sites[i].frac_pos);
                        match minimum_images(delta, cell, cutoff) {
                            Some(x) => x,
                            None => continue,
                        }
                    }
                };
                if let Some(s) = shell_of(d) {
                    self.shells[s].push(ShellPair { i, j, multiplicity: mult });
                }
            }
        }
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn is_periodic(&self) -> bool {
        self.cell_vectors.is_some()
    }

    pub fn cell_vectors(&self) -> Option<[[f64; 2]; 2]> {
        self.cell_vectors
    }

    /// Pairs in shell `s` (0-based: shell 0 holds nearest neighbours).
    pub fn shell_pairs(&self, s: usize) -> &[ShellPair] {
        &self.shells[s]
    }

    /// Lattice-unit separation of two sites (minimum image when periodic).
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let delta = sub(self.sites[j].frac_pos, self.sites[i].frac_pos);
        match self.cell_vectors {
            None => norm(delta),
            Some(cell) => minimum_image_distance(delta, cell),
        }
    }

    /// Every unordered pair with its lattice-unit separation.
    pub fn all_pairs(&self) -> Result<Vec<(usize, usize, f64)>> {
        if self.is_periodic() {
            return Err(Error::InvalidLattice(
                "untruncated pair sums require a non-periodic lattice".into(),
            ));
        }
        let n = self.num_sites();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push((i, j, self.distance(i, j)));
            }
        }
        Ok(out)
    }

    /// Nearest-neighbour adjacency lists.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_sites()];
        for p in &self.shells[0] {
            adj[p.i].push(p.j);
            adj[p.j].push(p.i);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.neighbours();
        let mut seen = vec![false; self.num_sites()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.num_sites()
    }

    pub fn to_doc(&self) -> LatticeDoc {
        LatticeDoc::new(
            self.sites.iter().map(|s| (s.frac_pos, s.sublattice)),
            self.is_periodic(),
            self.cell_vectors,
            None,
        )
    }

    pub fn from_doc(doc: &LatticeDoc) -> Result<Self> {
        let mut sites: Vec<&SiteDoc> = doc.sites.iter().collect();
        sites.sort_by_key(|s| s.i);
        if sites.iter().enumerate().any(|(k, s)| s.i != k) {
            return Err(Error::InvalidLattice("site indices must be 0..N-1".into()));
        }
        if doc.periodic != doc.cell.is_some() {
            return Err(Error::InvalidLattice("cell vectors present iff periodic".into()));
        }
        let pos: Vec<[f64; 2]> = sites.iter().map(|s| [s.x, s.y]).collect();
        let sub: Vec<Sublattice> = sites.iter().map(|s| s.sub).collect();
        Lattice::from_sites(&pos, &sub, doc.cell)
    }
}

/// JSON document shared by lattices (lattice units, `r_nn_um` null) and
/// layouts (μm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDoc {
    pub sites: Vec<SiteDoc>,
    pub periodic: bool,
    pub cell: Option<[[f64; 2]; 2]>,
    pub r_nn_um: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteDoc {
    pub i: usize,
    pub x: f64,
    pub y: f64,
    pub sub: Sublattice,
}

impl LatticeDoc {
    pub fn new(
        sites: impl Iterator<Item = ([f64; 2], Sublattice)>,
        periodic: bool,
        cell: Option<[[f64; 2]; 2]>,
        r_nn_um: Option<f64>,
    ) -> Self {
        let sites = sites
            .enumerate()
            .map(|(i, (p, sub))| SiteDoc { i, x: p[0], y: p[1], sub })
            .collect();
        LatticeDoc { sites, periodic, cell, r_nn_um }
    }
}

/// Builds a non-periodic honeycomb flake.
pub fn build_flake(shape: FlakeShape) -> Result<Lattice> {
    let (rows, cols) = shape.dims();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidLattice(format!("flake {shape} has no sites")));
    }
    let mut pos = Vec::with_capacity(rows * cols);
    let mut sub = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for k in 0..cols {
            let up = (k + r) % 2 == 0;
            let y = 1.5 * r as f64 + if up { 0.5 } else { 0.0 };
            pos.push([k as f64 * SQRT3 / 2.0, y]);
            sub.push(if up { Sublattice::A } else { Sublattice::B });
        }
    }
    let lattice = Lattice::from_sites(&pos, &sub, None)?;
    if !lattice.is_connected() {
        return Err(Error::InvalidLattice(format!(
            "flake {shape} is not a connected honeycomb fragment"
        )));
    }
    Ok(lattice)
}

/// Builds an `na × nb` periodic supercell of the two-site primitive cell.
pub fn build_supercell(na: usize, nb: usize) -> Result<Lattice> {
    if na == 0 || nb == 0 {
        return Err(Error::InvalidLattice("supercell dimensions must be at least 1".into()));
    }
    let mut pos = Vec::with_capacity(2 * na * nb);
    let mut sub = Vec::with_capacity(2 * na * nb);
    for b in 0..nb {
        for a in 0..na {
            let origin = add(scale(PRIMITIVE_A1, a as f64), scale(PRIMITIVE_A2, b as f64));
            pos.push(origin);
            sub.push(Sublattice::A);
            pos.push(add(origin, [0.0, 1.0]));
            sub.push(Sublattice::B);
        }
    }
    let cell = [scale(PRIMITIVE_A1, na as f64), scale(PRIMITIVE_A2, nb as f64)];
    Lattice::from_sites(&pos, &sub, Some(cell))
}

/// Shell index (0-based) for a lattice-unit distance, if within the kept shells.
pub fn shell_of(d: f64) -> Option<usize> {
    SHELL_DISTANCES
        .iter()
        .position(|&f| ((d - f) / f).abs() <= SHELL_TOLERANCE)
}

/// Fractional coordinates of `v` in the basis `cell`.
pub(crate) fn to_fractional(v: [f64; 2], cell: [[f64; 2]; 2]) -> [f64; 2] {
    let det = cross(cell[0], cell[1]);
    [cross(v, cell[1]) / det, cross(cell[0], v) / det]
}

/// Minimum separation over periodic images within `cutoff`, with the number
/// of images attaining it.
fn minimum_images(delta: [f64; 2], cell: [[f64; 2]; 2], cutoff: f64) -> Option<(f64, u32)> {
    let mut best = f64::INFINITY;
    let mut count = 0u32;
    for_each_image(delta, cell, cutoff, |d| {
        if d < best * (1.0 - SHELL_TOLERANCE) {
            best = d;
            count = 1;
        } else if ((d - best) / best).abs() <= SHELL_TOLERANCE {
            count += 1;
        }
    });
    (count > 0).then_some((best, count))
}

fn minimum_image_distance(delta: [f64; 2], cell: [[f64; 2]; 2]) -> f64 {
    // any image is an upper bound for the search radius
    let f = to_fractional(delta, cell);
    let wrapped = add(
        scale(cell[0], f[0] - f[0].round()),
        scale(cell[1], f[1] - f[1].round()),
    );
    let radius = norm(wrapped) + 1e-9;
    let mut best = f64::INFINITY;
    for_each_image(delta, cell, radius, |d| best = best.min(d));
    best
}

/// Calls `visit` with the length of every image `delta + k·A + l·B` whose
/// length does not exceed `radius`.
fn for_each_image(delta: [f64; 2], cell: [[f64; 2]; 2], radius: f64, mut visit: impl FnMut(f64)) {
    let area = cross(cell[0], cell[1]).abs();
    // distance between adjacent lattice lines parallel to the other vector
    let h_a = area / norm(cell[1]);
    let h_b = area / norm(cell[0]);
    let f = to_fractional(delta, cell);
    let ra = radius / h_a;
    let rb = radius / h_b;
    let k_lo = (-ra - f[0]).floor() as i64;
    let k_hi = (ra - f[0]).ceil() as i64;
    let l_lo = (-rb - f[1]).floor() as i64;
    let l_hi = (rb - f[1]).ceil() as i64;
    for k in k_lo..=k_hi {
        for l in l_lo..=l_hi {
            let v = add(delta, add(scale(cell[0], k as f64), scale(cell[1], l as f64)));
            let d = norm(v);
            if d <= radius && d > 1e-9 {
                visit(d);
            }
        }
    }
}

#[inline]
pub(crate) fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub(crate) fn scale(a: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] * s, a[1] * s]
}

#[inline]
pub(crate) fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub(crate) fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
