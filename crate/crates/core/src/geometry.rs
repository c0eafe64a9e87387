//! Planar array layouts, quadrant phase centers and MIMO virtual arrays.
//!
//! All layouts built here live on a lattice of pitch `spacing / 2` centered
//! at the origin: element positions of an even grid sit at odd multiples of
//! `spacing / 2` and quadrant centroids at even multiples. Coincidence and
//! overlap counts are done on those integer lattice coordinates so no float
//! tolerance has to be tuned.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A position in the array plane, meters. `x` is horizontal (azimuth),
/// `y` vertical (elevation); boresight is the +z axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Centroid of a non-empty point set.
pub fn centroid(points: &[Point2]) -> Point2 {
    let n = points.len() as f64;
    let sum = points.iter().fold(Point2::default(), |acc, &p| acc + p);
    sum * (1.0 / n)
}

/// Array quadrant, numbered counter-clockwise from the (+x, +y) block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::Q1, Quadrant::Q2, Quadrant::Q3, Quadrant::Q4];

    /// 1-based quadrant number.
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    /// 0-based index.
    pub fn index(self) -> usize {
        match self {
            Quadrant::Q1 => 0,
            Quadrant::Q2 => 1,
            Quadrant::Q3 => 2,
            Quadrant::Q4 => 3,
        }
    }

    pub fn from_index(i: usize) -> Quadrant {
        Quadrant::ALL[i % 4]
    }

    fn from_signs(x: f64, y: f64) -> Quadrant {
        match (x > 0.0, y > 0.0) {
            (true, true) => Quadrant::Q1,
            (false, true) => Quadrant::Q2,
            (false, false) => Quadrant::Q3,
            (true, false) => Quadrant::Q4,
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Rx,
    TxRx,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Rx => f.write_str("rx"),
            Role::TxRx => f.write_str("tx+rx"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub position: Point2,
    /// Column and row on the element grid.
    pub ix: usize,
    pub iy: usize,
    pub quadrant: Quadrant,
    pub role: Role,
}

/// A regular `nx` x `ny` planar grid centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    nx: usize,
    ny: usize,
    spacing: f64,
    elements: Vec<Element>,
}

/// Builds an even-sized planar grid with pitch `spacing` in both axes.
///
/// Every element transmits (within its quadrant sub-aperture) and receives,
/// so roles default to [`Role::TxRx`]; see [`ArrayLayout::set_role`].
pub fn build_planar_array(nx: usize, ny: usize, spacing: f64) -> Result<ArrayLayout> {
    if nx < 2 || ny < 2 {
        return Err(Error::Geometry(format!(
            "array must be at least 2 x 2, got {nx} x {ny}"
        )));
    }
    if !nx.is_multiple_of(2) || !ny.is_multiple_of(2) {
        return Err(Error::Geometry(format!(
            "odd element count {nx} x {ny}: quadrants would be unequal"
        )));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::Geometry(format!(
            "element spacing must be positive, got {spacing}"
        )));
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let x = (ix as f64 - (nx as f64 - 1.0) / 2.0) * spacing;
            let y = (iy as f64 - (ny as f64 - 1.0) / 2.0) * spacing;
            elements.push(Element {
                position: Point2::new(x, y),
                ix,
                iy,
                quadrant: Quadrant::from_signs(x, y),
                role: Role::TxRx,
            });
        }
    }
    Ok(ArrayLayout {
        nx,
        ny,
        spacing,
        elements,
    })
}

impl ArrayLayout {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.elements.iter().map(|e| e.position).collect()
    }

    pub fn set_role(&mut self, index: usize, role: Role) {
        self.elements[index].role = role;
    }

    /// Center-to-center span `((nx-1) d, (ny-1) d)`.
    pub fn extent(&self) -> (f64, f64) {
        (
            (self.nx - 1) as f64 * self.spacing,
            (self.ny - 1) as f64 * self.spacing,
        )
    }

    /// Physical aperture `(nx d, ny d)`: each element occupies one `d x d` cell.
    pub fn aperture(&self) -> (f64, f64) {
        (self.nx as f64 * self.spacing, self.ny as f64 * self.spacing)
    }

    /// Elements of one quadrant.
    pub fn quadrant_elements(&self, q: Quadrant) -> impl Iterator<Item = &Element> {
        self.elements.iter().filter(move |e| e.quadrant == q)
    }

    /// Lattice unit (half the element pitch).
    pub fn lattice_unit(&self) -> f64 {
        self.spacing / 2.0
    }
}

/// Integer lattice coordinates of `p` on a lattice of pitch `unit`, or
/// `None` when `p` is off-lattice.
pub fn lattice_coords(p: Point2, unit: f64) -> Option<(i64, i64)> {
    let fx = p.x / unit;
    let fy = p.y / unit;
    let (qx, qy) = (fx.round(), fy.round());
    let tol = 1e-6;
    if (fx - qx).abs() <= tol && (fy - qy).abs() <= tol {
        Some((qx as i64, qy as i64))
    } else {
        None
    }
}

/// Transmit and receive phase centers of one operating mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCenterSet {
    pub tx_centers: Vec<Point2>,
    pub rx_centers: Vec<Point2>,
}

/// Four transmit centers at the quadrant centroids (ordered Q1..Q4) and one
/// receive center at the array centroid.
pub fn quadrant_phase_centers(layout: &ArrayLayout) -> PhaseCenterSet {
    let tx_centers = Quadrant::ALL
        .iter()
        .map(|&q| {
            let pts: Vec<Point2> = layout.quadrant_elements(q).map(|e| e.position).collect();
            centroid(&pts)
        })
        .collect();
    PhaseCenterSet {
        tx_centers,
        rx_centers: vec![centroid(&layout.positions())],
    }
}

/// Conventional phased-array mode: one transmit center at the array centroid.
pub fn full_array_phase_centers(layout: &ArrayLayout) -> PhaseCenterSet {
    let c = centroid(&layout.positions());
    PhaseCenterSet {
        tx_centers: vec![c],
        rx_centers: vec![c],
    }
}

/// Spatial convolution of two point sets: every pairwise sum, multiplicity
/// kept, ordered `a`-major.
pub fn convolve(a: &[Point2], b: &[Point2]) -> Vec<Point2> {
    a.iter()
        .flat_map(|&p| b.iter().map(move |&q| p + q))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualElement {
    pub position: Point2,
    pub tx: usize,
    pub rx: usize,
}

/// Virtual receive positions of a coherent MIMO configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualArray {
    pub elements: Vec<VirtualElement>,
    /// Center-to-center span of the virtual positions, meters.
    pub extent: (f64, f64),
    /// `extent` plus one physical pitch per axis, comparable to
    /// [`ArrayLayout::aperture`].
    pub aperture: (f64, f64),
    /// Virtual positions (with multiplicity) that land on a physical element.
    pub coincidence_count: usize,
    /// Physical pitch and receive count of the generating layout.
    pub pitch: f64,
    pub rx_count: usize,
}

impl VirtualArray {
    pub fn positions(&self) -> Vec<Point2> {
        self.elements.iter().map(|e| e.position).collect()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

fn span(points: &[Point2]) -> (f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    (x1 - x0, y1 - y0)
}

/// Virtual array `{t + r - c}` for every TX center `t` and receive element
/// `r`, re-centered on the origin by `c = mean(t) + mean(r)`.
pub fn virtual_array(pcs: &PhaseCenterSet, rx_elements: &ArrayLayout) -> Result<VirtualArray> {
    if pcs.tx_centers.is_empty() {
        return Err(Error::Geometry("no transmit phase centers".into()));
    }
    if rx_elements.is_empty() {
        return Err(Error::Geometry("no receive elements".into()));
    }
    let rx = rx_elements.positions();
    let c = centroid(&pcs.tx_centers) + centroid(&rx);
    let mut elements = Vec::with_capacity(pcs.tx_centers.len() * rx.len());
    for (ti, &t) in pcs.tx_centers.iter().enumerate() {
        for (ri, &r) in rx.iter().enumerate() {
            elements.push(VirtualElement {
                position: t + r - c,
                tx: ti,
                rx: ri,
            });
        }
    }

    let unit = rx_elements.lattice_unit();
    let physical: BTreeSet<(i64, i64)> = rx
        .iter()
        .filter_map(|&p| lattice_coords(p, unit))
        .collect();
    let coincidence_count = elements
        .iter()
        .filter_map(|v| lattice_coords(v.position, unit))
        .filter(|q| physical.contains(q))
        .count();

    let positions: Vec<Point2> = elements.iter().map(|e| e.position).collect();
    let extent = span(&positions);
    let pitch = rx_elements.spacing();
    Ok(VirtualArray {
        elements,
        extent,
        aperture: (extent.0 + pitch, extent.1 + pitch),
        coincidence_count,
        pitch,
        rx_count: rx.len(),
    })
}

/// Ratio of distinct virtual sample positions to physical positions along
/// each principal axis, kept as exact integer counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapFactor {
    pub virtual_x: u64,
    pub physical_x: u64,
    pub virtual_y: u64,
    pub physical_y: u64,
}

impl OverlapFactor {
    pub fn x(&self) -> f64 {
        self.virtual_x as f64 / self.physical_x as f64
    }

    pub fn y(&self) -> f64 {
        self.virtual_y as f64 / self.physical_y as f64
    }

    /// Geometric mean of the per-axis ratios.
    pub fn value(&self) -> f64 {
        (self.x() * self.y()).sqrt()
    }

    /// True when both axes equal `num / den` exactly.
    pub fn equals_ratio(&self, num: u64, den: u64) -> bool {
        self.virtual_x * den == num * self.physical_x && self.virtual_y * den == num * self.physical_y
    }
}

/// Spatial-sample gain of a virtual array over its physical layout.
///
/// Along each axis, a shifted copy of the receive aperture that overlaps the
/// previous copy contributes only its non-overlapping positions as new
/// samples; the factor counts the distinct lattice positions that result.
pub fn overlap_factor(va: &VirtualArray, layout: &ArrayLayout) -> Result<OverlapFactor> {
    if va.rx_count != layout.len() {
        return Err(Error::Geometry(format!(
            "virtual array built from {} receive elements, layout has {}",
            va.rx_count,
            layout.len()
        )));
    }
    if ((va.pitch - layout.spacing()) / layout.spacing()).abs() > 1e-9 {
        return Err(Error::Geometry(format!(
            "virtual array pitch {} m does not match layout spacing {} m",
            va.pitch,
            layout.spacing()
        )));
    }
    let unit = layout.lattice_unit();
    let mut vx = BTreeSet::new();
    let mut vy = BTreeSet::new();
    for v in &va.elements {
        let (qx, qy) = lattice_coords(v.position, unit).ok_or_else(|| {
            Error::Geometry(format!(
                "virtual position ({}, {}) is off the layout lattice",
                v.position.x, v.position.y
            ))
        })?;
        vx.insert(qx);
        vy.insert(qy);
    }
    let mut px = BTreeSet::new();
    let mut py = BTreeSet::new();
    for e in layout.elements() {
        let (qx, qy) = lattice_coords(e.position, unit)
            .ok_or_else(|| Error::Geometry("layout element off its own lattice".into()))?;
        px.insert(qx);
        py.insert(qy);
    }
    Ok(OverlapFactor {
        virtual_x: vx.len() as u64,
        physical_x: px.len() as u64,
        virtual_y: vy.len() as u64,
        physical_y: py.len() as u64,
    })
}
