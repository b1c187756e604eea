//! Flat-top hexagonal tiling of a lat/lon rectangle and its adjacency complex.
//!
//! Columns `q` run east, rows `r` run north, odd columns are shifted half a
//! row north ("odd-q" offset layout). Centers sit on an equirectangular
//! projection: vertical spacing equals the hexagon size in degrees of
//! latitude, horizontal spacing is `√3/2` of it. A hexagon's id is
//! `r * ncols + q`.

use std::collections::{BTreeSet, VecDeque};
use std::str::FromStr;

use crate::complex::{ChainComplex, SimplicialComplex};
use crate::error::{Error, Result};

/// Latitude/longitude rectangle in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BBox {
    /// Rectangle spanned by two corners, in any order.
    pub fn from_corners(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> Result<Self> {
        let b = Self {
            lat_min: lat1.min(lat2),
            lat_max: lat1.max(lat2),
            lon_min: lon1.min(lon2),
            lon_max: lon1.max(lon2),
        };
        let finite = [lat1, lon1, lat2, lon2].iter().all(|v| v.is_finite());
        if !finite || b.lat_max <= b.lat_min || b.lon_max <= b.lon_min {
            return Err(Error::param(format!(
                "degenerate bounding box {lat1},{lon1},{lat2},{lon2}"
            )));
        }
        Ok(b)
    }

    /// The Caribbean / Gulf of Mexico box from 25°N 90°W to 10°N 55°W.
    pub fn caribbean() -> Self {
        Self {
            lat_min: 10.0,
            lat_max: 25.0,
            lon_min: -90.0,
            lon_max: -55.0,
        }
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }
}

impl FromStr for BBox {
    type Err = Error;

    /// `lat1,lon1,lat2,lon2`, e.g. `25,-90,10,-55`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bounding box {s:?}: {e}")))?;
        match parts[..] {
            [a, b, c, d] => Self::from_corners(a, b, c, d),
            _ => Err(Error::Parse(format!(
                "bounding box {s:?} needs four comma-separated numbers"
            ))),
        }
    }
}

/// Geometry of the offset grid, independent of any mask.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HexLayout {
    pub lat0: f64,
    pub lon0: f64,
    pub size: f64,
    pub ncols: usize,
    pub nrows: usize,
}

impl HexLayout {
    pub fn new(lat0: f64, lon0: f64, size: f64, ncols: usize, nrows: usize) -> Result<Self> {
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::param(format!(
                "hexagon size must be positive, got {size}"
            )));
        }
        if ncols == 0 || nrows == 0 {
            return Err(Error::param(
                "hex grid needs at least one row and one column",
            ));
        }
        Ok(Self {
            lat0,
            lon0,
            size,
            ncols,
            nrows,
        })
    }

    /// Smallest grid anchored at the south-west corner whose centers cover `bbox`.
    pub fn covering(bbox: &BBox, size: f64) -> Result<Self> {
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::param(format!(
                "hexagon size must be positive, got {size}"
            )));
        }
        let dx = Self::col_spacing(size);
        let ncols = ((bbox.lon_max - bbox.lon_min) / dx + 1e-9).floor() as usize + 1;
        let nrows = ((bbox.lat_max - bbox.lat_min) / size + 1e-9).floor() as usize + 1;
        Self::new(bbox.lat_min, bbox.lon_min, size, ncols, nrows)
    }

    fn col_spacing(size: f64) -> f64 {
        3f64.sqrt() / 2.0 * size
    }

    pub fn dx(&self) -> f64 {
        Self::col_spacing(self.size)
    }

    pub fn len(&self) -> usize {
        self.ncols * self.nrows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn id(&self, q: usize, r: usize) -> usize {
        r * self.ncols + q
    }

    /// `(q, r)` of a hexagon id.
    pub fn coords(&self, id: usize) -> (usize, usize) {
        (id % self.ncols, id / self.ncols)
    }

    /// `(lat, lon)` of a hexagon center.
    pub fn center(&self, id: usize) -> (f64, f64) {
        let (q, r) = self.coords(id);
        let lat = self.lat0 + r as f64 * self.size + (q & 1) as f64 * self.size / 2.0;
        let lon = self.lon0 + q as f64 * self.dx();
        (lat, lon)
    }

    /// Hexagon containing a point, or `None` outside the grid.
    pub fn locate(&self, lat: f64, lon: f64) -> Option<usize> {
        let qf = (lon - self.lon0) / self.dx();
        let rf = (lat - self.lat0) / self.size - qf / 2.0;
        let sf = -qf - rf;
        let (mut q, mut r, s) = (qf.round(), rf.round(), sf.round());
        let (dq, dr, ds) = ((q - qf).abs(), (r - rf).abs(), (s - sf).abs());
        if dq > dr && dq > ds {
            q = -r - s;
        } else if dr > ds {
            r = -q - s;
        }
        let (q, r) = (q as i64, r as i64);
        let row = r + (q - q.rem_euclid(2)).div_euclid(2);
        if q < 0 || row < 0 || q as usize >= self.ncols || row as usize >= self.nrows {
            return None;
        }
        Some(self.id(q as usize, row as usize))
    }

    /// Ids of hexagons sharing a side with `id`, ascending.
    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        let (q, r) = self.coords(id);
        let (q, r) = (q as i64, r as i64);
        // rows of the side neighbours in the adjacent columns
        let side = if q & 1 == 0 { [r - 1, r] } else { [r, r + 1] };
        let mut cand = vec![(q, r - 1), (q, r + 1)];
        for dq in [-1, 1] {
            cand.extend(side.iter().map(|&rr| (q + dq, rr)));
        }
        let mut out: Vec<usize> = cand
            .into_iter()
            .filter(|&(q, r)| {
                q >= 0 && r >= 0 && (q as usize) < self.ncols && (r as usize) < self.nrows
            })
            .map(|(q, r)| self.id(q as usize, r as usize))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Hexagon adjacency complex: a vertex per hexagon, an edge per shared side
/// and a filled triangle per triple of mutually adjacent hexagons.
#[derive(Clone, Debug)]
pub struct HexGridComplex {
    layout: HexLayout,
    excluded: BTreeSet<usize>,
    adjacency: Vec<Vec<usize>>,
    complex: SimplicialComplex,
}

/// Tile `bbox` with hexagons of the given size and drop the `mask` ids.
pub fn build_hex_grid(
    bbox: &BBox,
    hex_size: f64,
    mask: &BTreeSet<usize>,
) -> Result<HexGridComplex> {
    HexGridComplex::new(HexLayout::covering(bbox, hex_size)?, mask)
}

impl HexGridComplex {
    pub fn new(layout: HexLayout, mask: &BTreeSet<usize>) -> Result<Self> {
        let excluded: BTreeSet<usize> =
            mask.iter().copied().filter(|&h| h < layout.len()).collect();
        let live = |h: usize| !excluded.contains(&h);
        let adjacency: Vec<Vec<usize>> = (0..layout.len())
            .map(|h| {
                if live(h) {
                    layout
                        .neighbors(h)
                        .into_iter()
                        .filter(|&n| live(n))
                        .collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        let mut tops: Vec<Vec<usize>> = Vec::new();
        for h in (0..layout.len()).filter(|&h| live(h)) {
            let up: Vec<usize> = adjacency[h].iter().copied().filter(|&n| n > h).collect();
            if adjacency[h].is_empty() {
                tops.push(vec![h]);
            }
            for (i, &a) in up.iter().enumerate() {
                tops.push(vec![h, a]);
                for &b in &up[i + 1..] {
                    if adjacency[a].binary_search(&b).is_ok() {
                        tops.push(vec![h, a, b]);
                    }
                }
            }
        }
        if tops.is_empty() {
            return Err(Error::param("hex grid is empty after masking"));
        }
        let complex = SimplicialComplex::new(tops)?;
        Ok(Self {
            layout,
            excluded,
            adjacency,
            complex,
        })
    }

    pub fn layout(&self) -> &HexLayout {
        &self.layout
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn excluded(&self) -> &BTreeSet<usize> {
        &self.excluded
    }

    pub fn is_excluded(&self, id: usize) -> bool {
        self.excluded.contains(&id)
    }

    /// Ids of the hexagons kept as vertices, ascending.
    pub fn hex_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.complex.vertices()
    }

    pub fn hex_count(&self) -> usize {
        self.complex.count(0)
    }

    pub fn edge_count(&self) -> usize {
        self.complex.count(1)
    }

    /// Unmasked side neighbours of `id`.
    pub fn neighbors(&self, id: usize) -> &[usize] {
        self.adjacency.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Grid hexagon containing the point, masked or not.
    pub fn locate(&self, lat: f64, lon: f64) -> Option<usize> {
        self.layout.locate(lat, lon)
    }

    /// Edge index of `{a, b}` and the sign of the hop `a -> b`.
    pub fn hop(&self, a: usize, b: usize) -> Option<(usize, i64)> {
        self.complex.oriented_edge(a, b)
    }

    /// Shortest hop sequence from `a` to `b` over unmasked hexagons. BFS
    /// visits neighbours in ascending id order, so ties go to smaller ids.
    pub fn shortest_path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        if self.is_excluded(a)
            || self.is_excluded(b)
            || a >= self.layout.len()
            || b >= self.layout.len()
        {
            return None;
        }
        let mut prev = vec![usize::MAX; self.layout.len()];
        prev[a] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            if x == b {
                break;
            }
            for &y in &self.adjacency[x] {
                if prev[y] == usize::MAX {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        if prev[b] == usize::MAX {
            return None;
        }
        let mut path = vec![b];
        while *path.last().expect("non-empty") != a {
            path.push(prev[*path.last().expect("non-empty")]);
        }
        path.reverse();
        Some(path)
    }
}
