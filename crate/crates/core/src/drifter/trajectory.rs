//! Buoy trajectories, their discretization into signed edge traversals and
//! the GDP-style CSV reader.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::hexgrid::{BBox, HexGridComplex};
use crate::error::{Error, Result};
use crate::interpolate::SpatiotemporalFlow;

/// Pings from before this year are ignored.
pub const FIRST_YEAR: i32 = 1992;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ping {
    /// Seconds since the Unix epoch (UTC).
    pub time: i64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    buoy_id: String,
    pings: Vec<Ping>,
}

impl Trajectory {
    pub fn new(buoy_id: impl Into<String>, pings: Vec<Ping>) -> Result<Self> {
        let buoy_id = buoy_id.into();
        if let Some(w) = pings.windows(2).find(|w| w[1].time <= w[0].time) {
            return Err(Error::param(format!(
                "buoy {buoy_id}: timestamps not strictly increasing ({} then {})",
                w[0].time, w[1].time
            )));
        }
        Ok(Self { buoy_id, pings })
    }

    pub fn buoy_id(&self) -> &str {
        &self.buoy_id
    }

    pub fn pings(&self) -> &[Ping] {
        &self.pings
    }
}

/// Calendar year of an epoch timestamp.
pub fn year_of(time: i64) -> i32 {
    DateTime::from_timestamp(time, 0).map_or(i32::MIN, |d| d.year())
}

/// Epoch seconds of `year-month-day hour:00 UTC`.
pub fn epoch(year: i32, month: u32, day: u32, hour: u32) -> Result<i64> {
    NaiveDate::from_ymd_opt(year, month, day)
        .and_then(|d| d.and_hms_opt(hour, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
        .ok_or_else(|| Error::param(format!("invalid date {year}-{month}-{day} {hour}h")))
}

/// The consecutive years `first .. first + count`, one time step each.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct YearRange {
    pub first: i32,
    pub count: usize,
}

impl YearRange {
    pub fn index(&self, year: i32) -> Option<usize> {
        let k = year.checked_sub(self.first)?;
        (k >= 0 && (k as usize) < self.count).then_some(k as usize)
    }

    /// Smallest range covering every ping.
    pub fn spanning(trajectories: &[Trajectory]) -> Option<Self> {
        let years = trajectories
            .iter()
            .flat_map(|t| t.pings.iter().map(|p| year_of(p.time)));
        let (lo, hi) = years.fold((i32::MAX, i32::MIN), |(lo, hi), y| (lo.min(y), hi.max(y)));
        (lo <= hi).then(|| Self {
            first: lo,
            count: (hi - lo + 1) as usize,
        })
    }
}

/// Signed edge traversals of one trajectory, grouped by year index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiscreteTrajectory {
    pub per_year: BTreeMap<usize, BTreeMap<usize, i64>>,
    pub dropped_outside: usize,
    pub dropped_land: usize,
    /// Hops between hexagons with no connecting path.
    pub unbridged: usize,
    /// Hops whose year falls outside the requested range.
    pub out_of_range: usize,
}

impl DiscreteTrajectory {
    /// Dense flow vector of one year, in the grid's edge order.
    pub fn year_vector(&self, year: usize, edge_count: usize) -> Vec<f64> {
        let mut v = vec![0.0; edge_count];
        if let Some(m) = self.per_year.get(&year) {
            for (&e, &c) in m {
                v[e] = c as f64;
            }
        }
        v
    }
}

/// Map pings to hexagons, collapse repeats and turn each hop into ±1 on the
/// traversed edges. Hops between non-adjacent hexagons follow a shortest
/// path; each hop counts in the year of its earlier ping.
pub fn discretize_trajectory(
    grid: &HexGridComplex,
    traj: &Trajectory,
    years: YearRange,
) -> DiscreteTrajectory {
    let mut out = DiscreteTrajectory::default();
    let mut last: Option<(usize, i64)> = None;
    for p in &traj.pings {
        let Some(h) = grid.locate(p.lat, p.lon) else {
            out.dropped_outside += 1;
            continue;
        };
        if grid.is_excluded(h) {
            out.dropped_land += 1;
            continue;
        }
        if let Some((prev, t_prev)) = last {
            if prev != h {
                match (years.index(year_of(t_prev)), grid.shortest_path(prev, h)) {
                    (_, None) => out.unbridged += 1,
                    (None, Some(_)) => out.out_of_range += 1,
                    (Some(y), Some(path)) => {
                        let entry = out.per_year.entry(y).or_default();
                        for w in path.windows(2) {
                            let (e, s) = grid.hop(w[0], w[1]).expect("path follows grid edges");
                            *entry.entry(e).or_insert(0) += s;
                        }
                    }
                }
            }
        }
        last = Some((h, p.time));
    }
    for m in out.per_year.values_mut() {
        m.retain(|_, c| *c != 0);
    }
    out
}

/// Yearly edge flows: the sum of the discretized trajectories of each year.
#[derive(Clone, Debug, PartialEq)]
pub struct YearlyFlows {
    pub years: YearRange,
    pub flows: SpatiotemporalFlow,
}

impl YearlyFlows {
    pub fn zeros(years: YearRange, edge_count: usize) -> Self {
        Self {
            years,
            flows: SpatiotemporalFlow::zeros(years.count, edge_count),
        }
    }

    pub fn add(&mut self, d: &DiscreteTrajectory) {
        for (&t, m) in &d.per_year {
            for (&e, &c) in m {
                let v = self.flows.get(t, e) + c as f64;
                self.flows.set(t, e, v);
            }
        }
    }

    /// Discretize every trajectory in parallel and sum per year.
    pub fn from_trajectories(
        grid: &HexGridComplex,
        trajectories: &[Trajectory],
        years: YearRange,
    ) -> (Self, DropCounts) {
        let parts: Vec<DiscreteTrajectory> = trajectories
            .par_iter()
            .map(|t| discretize_trajectory(grid, t, years))
            .collect();
        let mut out = Self::zeros(years, grid.edge_count());
        let mut counts = DropCounts::default();
        for d in &parts {
            out.add(d);
            counts.outside += d.dropped_outside;
            counts.land += d.dropped_land;
            counts.unbridged += d.unbridged;
            counts.out_of_range += d.out_of_range;
        }
        (out, counts)
    }

    /// Values in the grade `(1, 0)` ordering of `X × P_T`.
    pub fn to_bigraded(&self) -> Vec<f64> {
        self.flows.to_bigraded()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DropCounts {
    pub outside: usize,
    pub land: usize,
    pub unbridged: usize,
    pub out_of_range: usize,
}

/// Shuffle buoy ids with a seeded RNG and put the first `fraction` of them
/// in the training set. Whole buoys move together.
pub fn split_train_test(
    trajectories: &[Trajectory],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<Trajectory>, Vec<Trajectory>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if trajectories.len() < 2 {
        return Err(Error::param(format!(
            "need at least 2 trajectories to split, got {}",
            trajectories.len()
        )));
    }
    let mut ids: Vec<&str> = trajectories.iter().map(|t| t.buoy_id()).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((fraction * ids.len() as f64).round() as usize)
        .clamp(1, ids.len().saturating_sub(1).max(1));
    let train_ids: std::collections::HashSet<&str> = ids[..n_train].iter().copied().collect();
    let (train, test): (Vec<Trajectory>, Vec<Trajectory>) = trajectories
        .iter()
        .cloned()
        .partition(|t| train_ids.contains(t.buoy_id()));
    Ok((train, test))
}

fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v.floor() as i64);
    }
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Some(d.timestamp());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(d) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(d.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_time(Default::default()).and_utc().timestamp())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IngestReport {
    pub trajectories: Vec<Trajectory>,
    pub unparseable: usize,
    pub before_first_year: usize,
    pub outside_bbox: usize,
    /// Repeated timestamps within one buoy; the first ping wins.
    pub duplicate_times: usize,
}

/// Read `id,timestamp,lat,lon` rows. Timestamps are ISO-8601 or epoch
/// seconds. Rows before 1992 or outside `bbox` are dropped; unparseable
/// rows are skipped and counted.
pub fn ingest_gdp_csv(path: &Path, bbox: Option<&BBox>) -> Result<IngestReport> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_gdp_reader(file, bbox)
}

pub fn ingest_gdp_reader<R: std::io::Read>(reader: R, bbox: Option<&BBox>) -> Result<IngestReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    if header != ["id", "timestamp", "lat", "lon"] {
        return Err(Error::Parse(format!(
            "expected header id,timestamp,lat,lon, found {}",
            header.join(",")
        )));
    }
    let mut report = IngestReport::default();
    let mut by_id: BTreeMap<String, Vec<Ping>> = BTreeMap::new();
    for rec in rdr.records() {
        let parsed = rec.ok().and_then(|r| {
            if r.len() != 4 {
                return None;
            }
            let time = parse_timestamp(&r[1])?;
            let lat: f64 = r[2].parse().ok().filter(|v: &f64| v.is_finite())?;
            let lon: f64 = r[3].parse().ok().filter(|v: &f64| v.is_finite())?;
            Some((r[0].to_string(), Ping { time, lat, lon }))
        });
        let Some((id, ping)) = parsed else {
            report.unparseable += 1;
            continue;
        };
        if year_of(ping.time) < FIRST_YEAR {
            report.before_first_year += 1;
            continue;
        }
        if bbox.is_some_and(|b| !b.contains(ping.lat, ping.lon)) {
            report.outside_bbox += 1;
            continue;
        }
        by_id.entry(id).or_default().push(ping);
    }
    if report.unparseable > 0 {
        warn!("skipped {} unparseable rows", report.unparseable);
    }
    for (id, mut pings) in by_id {
        pings.sort_by_key(|p| p.time);
        let before = pings.len();
        pings.dedup_by_key(|p| p.time);
        report.duplicate_times += before - pings.len();
        report.trajectories.push(Trajectory::new(id, pings)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::ChainComplex;
    use crate::drifter::hexgrid::HexLayout;
    use std::collections::BTreeSet;

    fn grid(n: usize) -> HexGridComplex {
        HexGridComplex::new(
            HexLayout::new(0.0, 0.0, 0.3, n, n).unwrap(),
            &BTreeSet::new(),
        )
        .unwrap()
    }

    fn traj_through(g: &HexGridComplex, hexes: &[usize], start: i64) -> Trajectory {
        let pings = hexes
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let (lat, lon) = g.layout().center(h);
                Ping {
                    time: start + 6 * 3600 * i as i64,
                    lat,
                    lon,
                }
            })
            .collect();
        Trajectory::new("b", pings).unwrap()
    }

    fn years() -> YearRange {
        YearRange {
            first: 2000,
            count: 2,
        }
    }

    #[test]
    fn staying_in_one_hexagon_gives_nothing() {
        let g = grid(3);
        let t0 = epoch(2000, 5, 1, 0).unwrap();
        let d = discretize_trajectory(&g, &traj_through(&g, &[4, 4, 4], t0), years());
        assert!(d.per_year.values().all(|m| m.is_empty()));
    }

    #[test]
    fn one_hop_in_reference_orientation_is_plus_one() {
        let g = grid(3);
        let t0 = epoch(2000, 5, 1, 0).unwrap();
        let (a, b) = (1, 4);
        assert!(g.neighbors(a).contains(&b));
        let d = discretize_trajectory(&g, &traj_through(&g, &[a, b], t0), years());
        let e = g.complex().index_of(&[a, b]).unwrap();
        assert_eq!(d.per_year[&0], BTreeMap::from([(e, 1)]));
        let d = discretize_trajectory(&g, &traj_through(&g, &[b, a], t0), years());
        assert_eq!(d.per_year[&0], BTreeMap::from([(e, -1)]));
    }

    #[test]
    fn closed_loop_is_divergence_free() {
        let g = grid(5);
        let l = g.layout();
        let centre = l.id(2, 2);
        // walk the six neighbours of the centre in angular order and close the loop
        let mut ring = g.neighbors(centre).to_vec();
        let (clat, clon) = l.center(centre);
        ring.sort_by(|&a, &b| {
            let ang = |h: usize| {
                let (la, lo) = l.center(h);
                (la - clat).atan2(lo - clon)
            };
            ang(a).total_cmp(&ang(b))
        });
        ring.push(ring[0]);
        let t0 = epoch(2000, 5, 1, 0).unwrap();
        let d = discretize_trajectory(&g, &traj_through(&g, &ring, t0), years());
        let f = d.year_vector(0, g.edge_count());
        assert_eq!(f.iter().filter(|v| **v != 0.0).count(), 6);
        let div = g.complex().boundary(1).to_f64().matvec(&f);
        assert!(div.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn non_adjacent_hops_are_bridged() {
        let g = grid(5);
        let l = g.layout();
        let (a, b) = (l.id(0, 0), l.id(4, 0));
        let t0 = epoch(2000, 5, 1, 0).unwrap();
        let d = discretize_trajectory(&g, &traj_through(&g, &[a, b], t0), years());
        let f = d.year_vector(0, g.edge_count());
        let div = g.complex().boundary(1).to_f64().matvec(&f);
        let verts: Vec<usize> = g.hex_ids().collect();
        for (i, v) in div.iter().enumerate() {
            let want = if verts[i] == a {
                -1.0
            } else if verts[i] == b {
                1.0
            } else {
                0.0
            };
            assert_eq!(*v, want);
        }
    }

    #[test]
    fn hops_use_the_year_of_the_earlier_ping() {
        let g = grid(3);
        let late = epoch(2000, 12, 31, 18).unwrap();
        let d = discretize_trajectory(&g, &traj_through(&g, &[1, 4, 5], late), years());
        assert_eq!(d.per_year[&0].len(), 1);
        assert_eq!(d.per_year[&1].len(), 1);
    }

    #[test]
    fn land_and_outside_pings_are_counted() {
        let l = HexLayout::new(0.0, 0.0, 0.3, 4, 4).unwrap();
        let g = HexGridComplex::new(l, &BTreeSet::from([5])).unwrap();
        let (lat, lon) = l.center(5);
        let pings = vec![
            Ping { time: 0, lat, lon },
            Ping {
                time: 1,
                lat: -5.0,
                lon: -5.0,
            },
            Ping {
                time: 2,
                lat: l.center(0).0,
                lon: l.center(0).1,
            },
        ];
        let d = discretize_trajectory(
            &g,
            &Trajectory::new("x", pings).unwrap(),
            YearRange {
                first: 1970,
                count: 1,
            },
        );
        assert_eq!((d.dropped_land, d.dropped_outside), (1, 1));
    }

    #[test]
    fn timestamps_must_increase() {
        let p = Ping {
            time: 5,
            lat: 0.0,
            lon: 0.0,
        };
        assert!(Trajectory::new("x", vec![p, p]).is_err());
    }

    fn named(n: usize) -> Vec<Trajectory> {
        (0..n)
            .map(|i| Trajectory::new(format!("b{i}"), vec![]).unwrap())
            .collect()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let all = named(10);
        let (tr, te) = split_train_test(&all, 0.8, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let (tr2, te2) = split_train_test(&all, 0.8, 7).unwrap();
        assert_eq!((tr.clone(), te.clone()), (tr2, te2));
        let mut ids: Vec<&str> = tr.iter().chain(&te).map(|t| t.buoy_id()).collect();
        ids.sort_unstable();
        let mut want: Vec<&str> = all.iter().map(|t| t.buoy_id()).collect();
        want.sort_unstable();
        assert_eq!(ids, want);
        assert!(split_train_test(&named(1), 0.8, 7).is_err());
        assert!(split_train_test(&all, 1.0, 7).is_err());
    }

    #[test]
    fn ingest_groups_sorts_and_filters() {
        let csv = "id,timestamp,lat,lon\n\
                   a,2001-01-01T12:00:00Z,12.0,-60.0\n\
                   b,2001-01-01T00:00:00,13.0,-61.0\n\
                   a,2001-01-01T06:00:00Z,12.1,-60.1\n\
                   b,978310800,13.1,-61.1\n\
                   a,1991-06-01T00:00:00Z,12.0,-60.0\n\
                   b,2001-01-02,13.2,-61.2\n\
                   a,2001-01-03T00:00:00Z,40.0,-60.0\n\
                   a,not-a-time,12.0,-60.0\n\
                   b,2001-01-04,x,-61.2\n\
                   a,2001-01-01T18:00:00Z,12.2,-60.2\n";
        let r = ingest_gdp_reader(csv.as_bytes(), Some(&BBox::caribbean())).unwrap();
        assert_eq!(r.trajectories.len(), 2);
        assert_eq!(r.before_first_year, 1);
        assert_eq!(r.outside_bbox, 1);
        assert_eq!(r.unparseable, 2);
        let a = &r.trajectories[0];
        assert_eq!(a.buoy_id(), "a");
        assert_eq!(a.pings().len(), 3);
        assert!(a.pings().windows(2).all(|w| w[0].time < w[1].time));
        assert_eq!(a.pings()[0].lat, 12.1);
        assert_eq!(r.trajectories[1].pings().len(), 3);
    }

    #[test]
    fn ingest_rejects_bad_header() {
        assert!(ingest_gdp_reader("buoy,time,lat,lon\n".as_bytes(), None).is_err());
    }
}
