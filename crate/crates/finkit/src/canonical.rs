//! Canonical maps on uniform fronts: enumeration in a fixed order, closed
//! counting of the equivalence relations they induce, and the search that
//! canonizes a coloring below a universe of staircase systems.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::{approximations, BlockSequence};
use crate::error::FinError;
use crate::front::Coloring;
use crate::stair::{enumerate_stair_functions, eval, is_sos_sequence, StairFunction};
use crate::vector::KVector;

/// Raw field mirror used to validate deserialized map groups.
#[derive(Deserialize)]
struct MapGroupData {
    coords: Vec<usize>,
    shifts: Vec<u8>,
    g: StairFunction,
}

/// One output block of a canonical map: the selected coordinates, the tetris
/// shift applied to each, and the staircase function reading their sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MapGroupData")]
pub struct MapGroup {
    coords: Vec<usize>,
    shifts: Vec<u8>,
    g: StairFunction,
}

impl TryFrom<MapGroupData> for MapGroup {
    type Error = FinError;

    fn try_from(d: MapGroupData) -> Result<Self, FinError> {
        MapGroup::new(d.coords, d.shifts, d.g)
    }
}

impl MapGroup {
    /// Builds a group; coordinates must ascend, shifts match them one to one
    /// with at least one zero, and the reading function must be non-constant.
    pub fn new(coords: Vec<usize>, shifts: Vec<u8>, g: StairFunction) -> Result<Self, FinError> {
        if coords.is_empty() {
            return Err(FinError::EmptyInput);
        }
        if !coords.windows(2).all(|w| w[0] < w[1]) {
            return Err(FinError::InvalidInput("group coordinates must ascend".into()));
        }
        if shifts.len() != coords.len() {
            return Err(FinError::InvalidInput("one shift per coordinate".into()));
        }
        if !shifts.contains(&0) {
            return Err(FinError::InvalidInput("some coordinate must stay unshifted".into()));
        }
        if g.is_empty() {
            return Err(FinError::InvalidInput("group readings must be non-constant".into()));
        }
        Ok(MapGroup { coords, shifts, g })
    }

    /// The selected coordinates, ascending.
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    /// The tetris shift per coordinate.
    pub fn shifts(&self) -> &[u8] {
        &self.shifts
    }

    /// The staircase function applied to the shifted sum.
    pub fn g(&self) -> &StairFunction {
        &self.g
    }
}

/// Raw field mirror used to validate deserialized canonical maps.
#[derive(Deserialize)]
struct CanonicalMapData {
    level: u8,
    arity: usize,
    groups: Vec<MapGroup>,
}

/// A canonical map on length-`arity` members: pairwise disjoint groups of
/// coordinates, each producing one output block. The empty map is the
/// constant map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CanonicalMapData")]
pub struct CanonicalMap {
    level: u8,
    arity: usize,
    groups: Vec<MapGroup>,
}

impl TryFrom<CanonicalMapData> for CanonicalMap {
    type Error = FinError;

    fn try_from(d: CanonicalMapData) -> Result<Self, FinError> {
        CanonicalMap::new(d.level, d.arity, d.groups)
    }
}

impl CanonicalMap {
    /// Builds a map; groups must use disjoint coordinates below the arity,
    /// be ordered by least coordinate, and read at the map's level with
    /// shifts below it.
    pub fn new(level: u8, arity: usize, groups: Vec<MapGroup>) -> Result<Self, FinError> {
        if level == 0 {
            return Err(FinError::InvalidInput("canonical maps need level at least 1".into()));
        }
        let mut used: Vec<usize> = Vec::new();
        let mut last_least: Option<usize> = None;
        for group in &groups {
            if group.g.level() != level {
                return Err(FinError::LevelMismatch { left: level, right: group.g.level() });
            }
            if group.shifts.iter().any(|&s| s >= level) {
                return Err(FinError::InvalidInput(format!(
                    "shifts must stay below the level {level}"
                )));
            }
            for &c in &group.coords {
                if c >= arity {
                    return Err(FinError::OutOfRange { index: c, len: arity });
                }
                if used.contains(&c) {
                    return Err(FinError::InvalidInput(format!(
                        "coordinate {c} appears in two groups"
                    )));
                }
                used.push(c);
            }
            let least = group.coords[0];
            if last_least.is_some_and(|prev| prev >= least) {
                return Err(FinError::InvalidInput(
                    "groups must be ordered by least coordinate".into(),
                ));
            }
            last_least = Some(least);
        }
        Ok(CanonicalMap { level, arity, groups })
    }

    /// The constant map at a level and arity.
    pub fn constant(level: u8, arity: usize) -> Result<Self, FinError> {
        CanonicalMap::new(level, arity, Vec::new())
    }

    /// The level of the members the map reads.
    pub fn level(&self) -> u8 {
        self.level
    }

    /// The member length the map reads.
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// The output groups, ordered by least coordinate.
    pub fn groups(&self) -> &[MapGroup] {
        &self.groups
    }

    /// Whether this is the constant map.
    pub fn is_constant(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Applies the map to a member: each group tetris-shifts its blocks, sums
/// them, and reads the sum through its staircase function. Fails if the
/// member does not fit the map or an atom reading overlaps.
pub fn apply_canonical(
    map: &CanonicalMap,
    element: &BlockSequence,
) -> Result<Vec<KVector>, FinError> {
    if element.len() != map.arity {
        return Err(FinError::InvalidArity(format!(
            "map reads {} blocks but the member has {}",
            map.arity,
            element.len()
        )));
    }
    if element.level() != map.level {
        return Err(FinError::LevelMismatch { left: map.level, right: element.level() });
    }
    let mut out = Vec::with_capacity(map.groups.len());
    for group in &map.groups {
        let parts: Vec<KVector> = group
            .coords
            .iter()
            .zip(&group.shifts)
            .map(|(&c, &s)| element.blocks()[c].tetris(s))
            .collect();
        let sum = KVector::block_sum(&parts)?;
        out.push(eval(&group.g, &sum)?);
    }
    Ok(out)
}

/// Lists every way to partition a subset of the coordinates into ordered
/// groups. Coordinates are decided left to right — skipped, joined to an
/// existing group in creation order, or opened as a new group — so the empty
/// shape comes first.
fn shapes(arity: usize) -> Vec<Vec<Vec<usize>>> {
    fn walk(coord: usize, arity: usize, groups: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if coord == arity {
            out.push(groups.clone());
            return;
        }
        walk(coord + 1, arity, groups, out);
        for gi in 0..groups.len() {
            groups[gi].push(coord);
            walk(coord + 1, arity, groups, out);
            groups[gi].pop();
        }
        groups.push(vec![coord]);
        walk(coord + 1, arity, groups, out);
        groups.pop();
    }
    let mut out = Vec::new();
    walk(0, arity, &mut Vec::new(), &mut out);
    out
}

/// Enumerates every canonical map at a level and arity in a fixed order:
/// shapes as produced by the coordinate recursion, then shift assignments
/// (one odometer over all slots, rightmost fastest, each group keeping a
/// zero), then readings from the deduplicated non-constant staircase
/// functions (rightmost group fastest). At arity 1 this is in order
/// bijection with the deduplicated function list.
pub fn enumerate_canonical_maps(level: u8, arity: usize) -> Vec<CanonicalMap> {
    if level == 0 {
        return Vec::new();
    }
    let nonconst: Vec<StairFunction> = enumerate_stair_functions(level, true)
        .into_iter()
        .filter(|f| !f.is_empty())
        .collect();
    let mut out = Vec::new();
    for shape in shapes(arity) {
        let slot_count: usize = shape.iter().map(|g| g.len()).sum();
        let mut shift_vals = vec![0u8; slot_count];
        'shifts: loop {
            let mut ok = true;
            let mut off = 0;
            for coords in &shape {
                if !shift_vals[off..off + coords.len()].contains(&0) {
                    ok = false;
                    break;
                }
                off += coords.len();
            }
            if ok {
                if shape.is_empty() {
                    out.push(CanonicalMap { level, arity, groups: Vec::new() });
                } else {
                    let mut gidx = vec![0usize; shape.len()];
                    'readings: loop {
                        let mut off = 0;
                        let groups: Vec<MapGroup> = shape
                            .iter()
                            .zip(&gidx)
                            .map(|(coords, &gi)| {
                                let shifts = shift_vals[off..off + coords.len()].to_vec();
                                off += coords.len();
                                MapGroup {
                                    coords: coords.clone(),
                                    shifts,
                                    g: nonconst[gi].clone(),
                                }
                            })
                            .collect();
                        out.push(CanonicalMap { level, arity, groups });
                        let mut pos = gidx.len();
                        loop {
                            if pos == 0 {
                                break 'readings;
                            }
                            pos -= 1;
                            if gidx[pos] + 1 < nonconst.len() {
                                gidx[pos] += 1;
                                break;
                            }
                            gidx[pos] = 0;
                        }
                    }
                }
            }
            let mut pos = slot_count;
            loop {
                if pos == 0 {
                    break 'shifts;
                }
                pos -= 1;
                if shift_vals[pos] + 1 < level {
                    shift_vals[pos] += 1;
                    break;
                }
                shift_vals[pos] = 0;
            }
        }
    }
    out
}

fn binom(n: usize, r: usize) -> BigUint {
    let mut out = BigUint::from(1u32);
    for i in 1..=r {
        out = out * BigUint::from(n - r + i) / BigUint::from(i);
    }
    out
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse::<BigUint>().map_err(serde::de::Error::custom)
    }
}

/// The counting summary for canonical equivalence relations on a uniform
/// front.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountReport {
    /// The level counted at.
    pub level: u8,
    /// The member length counted at.
    pub arity: usize,
    /// Deduplicated staircase functions at the level.
    pub t: u64,
    /// Those keeping a central reading.
    pub t_prime: u64,
    /// `level · t_prime`, the count weighted by central choices.
    pub t_tilde: u64,
    /// Canonical equivalence relations at the arity, as a decimal string in
    /// JSON.
    #[serde(with = "decimal")]
    pub c: BigUint,
}

/// Counts the canonical equivalence relations on uniform fronts of the
/// given arity by the recursion
/// `C_d = Σ_{j=2}^{d} C(d,j)·t̃·t^{d−j} + Σ_{j=2}^{d−2} C(d,j)·t̃·C_{d−j}`,
/// seeded by the deduplicated function counts. Needs arity at least 2.
pub fn count_canonical(level: u8, arity: usize) -> Result<CountReport, FinError> {
    if level == 0 {
        return Err(FinError::InvalidInput("counting needs level at least 1".into()));
    }
    if arity < 2 {
        return Err(FinError::InvalidArity(format!(
            "the closed count needs arity at least 2, got {arity}"
        )));
    }
    let deduped = enumerate_stair_functions(level, true);
    let t = deduped.len() as u64;
    let t_prime = deduped.iter().filter(|f| f.theta2().is_some()).count() as u64;
    let t_tilde = level as u64 * t_prime;
    let t_big = BigUint::from(t);
    let tt_big = BigUint::from(t_tilde);
    let mut memo: Vec<BigUint> = vec![BigUint::from(0u32); arity + 1];
    for d in 2..=arity {
        let mut total = BigUint::from(0u32);
        for j in 2..=d {
            total += binom(d, j) * &tt_big * t_big.pow((d - j) as u32);
        }
        for j in 2..=d.saturating_sub(2) {
            total += binom(d, j) * &tt_big * &memo[d - j];
        }
        memo[d] = total;
    }
    Ok(CountReport { level, arity, t, t_prime, t_tilde, c: memo[arity].clone() })
}

/// Which canonization statement to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonizeMode {
    /// Arity-1 fronts only: the coloring reduces to a staircase function.
    Arity1,
    /// Any uniform arity.
    General,
}

/// Search space summary when no pair fits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonizeReport {
    /// Inner universes tried.
    pub y_candidates: usize,
    /// Canonical maps tried per universe.
    pub map_candidates: usize,
    /// The front's member length.
    pub arity: usize,
    /// Blocks per inner universe.
    pub target_len: usize,
}

/// Result of a canonization search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonizeOutcome {
    /// A universe and map witnessing the coloring's canonical form.
    Found {
        /// The inner universe.
        y: BlockSequence,
        /// The map inducing exactly the coloring's equivalence on members
        /// below `y`.
        map: CanonicalMap,
    },
    /// Every candidate pair failed at this scale.
    Exhausted(CanonizeReport),
}

fn first_fitting_map(
    coloring: &Coloring,
    y: &BlockSequence,
    maps: &[CanonicalMap],
) -> Result<Option<usize>, FinError> {
    let members = coloring.front().restrict(y)?.members().to_vec();
    let colors: Vec<String> =
        members.iter().map(|m| coloring.color(m)).collect::<Result<_, _>>()?;
    'maps: for (mi, map) in maps.iter().enumerate() {
        let mut images: Vec<Vec<KVector>> = Vec::with_capacity(members.len());
        for member in &members {
            match apply_canonical(map, member) {
                Ok(image) => images.push(image),
                // A reading can overlap off the staircase shape; such a map
                // simply does not fit this universe.
                Err(_) => continue 'maps,
            }
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                if (colors[i] == colors[j]) != (images[i] == images[j]) {
                    continue 'maps;
                }
            }
        }
        return Ok(Some(mi));
    }
    Ok(None)
}

/// Searches for an inner universe `y` below `x` and a canonical map whose
/// induced equivalence on the front's members below `y` coincides with the
/// coloring's. Universes are tried in canonical order and maps in
/// enumeration order, so the answer is deterministic; the first fit wins.
///
/// The universe must consist of staircase systems and the coloring's front
/// must live on it; `target_len` bounds the inner universes and must lie
/// between the front's arity and the universe length.
pub fn canonize(
    coloring: &Coloring,
    x: &BlockSequence,
    target_len: usize,
    mode: CanonizeMode,
) -> Result<CanonizeOutcome, FinError> {
    if coloring.front().base() != x {
        return Err(FinError::FrontMismatch(
            "the coloring's front lives on a different universe".into(),
        ));
    }
    if !is_sos_sequence(x, false) {
        return Err(FinError::InvalidInput(
            "canonization needs a universe of staircase systems".into(),
        ));
    }
    let arity = coloring.front().arity().ok_or(FinError::NonUniformFront)?;
    if matches!(mode, CanonizeMode::Arity1) && arity != 1 {
        return Err(FinError::InvalidArity(format!(
            "arity-1 mode cannot read a front of arity {arity}"
        )));
    }
    if target_len < arity || target_len > x.len() {
        return Err(FinError::InvalidInput(format!(
            "target length {target_len} must lie between the arity {arity} and the universe length {}",
            x.len()
        )));
    }
    let maps = enumerate_canonical_maps(x.level(), arity);
    let ys = approximations(x, target_len)?;
    let found = ys
        .par_iter()
        .enumerate()
        .find_map_first(|(yi, y)| match first_fitting_map(coloring, y, &maps) {
            Ok(Some(mi)) => Some(Ok((yi, mi))),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        });
    match found {
        Some(Ok((yi, mi))) => {
            Ok(CanonizeOutcome::Found { y: ys[yi].clone(), map: maps[mi].clone() })
        }
        Some(Err(e)) => Err(e),
        None => Ok(CanonizeOutcome::Exhausted(CanonizeReport {
            y_candidates: ys.len(),
            map_candidates: maps.len(),
            arity,
            target_len,
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::{ColorRule, ColorSource, Front};
    use crate::stair::make_sos;

    fn stair(level: u8, text: &str) -> StairFunction {
        StairFunction::parse(level, text).unwrap()
    }

    #[test]
    fn enumeration_counts_and_leading_maps() {
        let maps = enumerate_canonical_maps(1, 2);
        assert_eq!(maps.len(), 29);
        assert!(maps[0].is_constant());
        // The first non-constant map reads the second coordinate with the
        // first deduplicated non-constant function.
        assert_eq!(maps[1].groups().len(), 1);
        assert_eq!(maps[1].groups()[0].coords(), &[1]);
        assert_eq!(maps[1].groups()[0].g(), &stair(1, "max{1}"));
        // Two-group shapes come last: 1 + 4 + 4 + 4 + 16.
        let two_group = maps.iter().filter(|m| m.groups().len() == 2).count();
        assert_eq!(two_group, 16);
    }

    #[test]
    fn arity_one_maps_mirror_the_function_list() {
        let deduped = enumerate_stair_functions(1, true);
        let maps = enumerate_canonical_maps(1, 1);
        assert_eq!(maps.len(), deduped.len());
        assert!(maps[0].is_constant() && deduped[0].is_empty());
        for (map, f) in maps[1..].iter().zip(&deduped[1..]) {
            assert_eq!(map.groups().len(), 1);
            assert_eq!(map.groups()[0].coords(), &[0]);
            assert_eq!(map.groups()[0].g(), f);
        }
    }

    #[test]
    fn counting_matches_the_frozen_values() {
        let report = count_canonical(1, 2).unwrap();
        assert_eq!((report.t, report.t_prime, report.t_tilde), (5, 1, 1));
        assert_eq!(report.c, BigUint::from(1u32));
        assert_eq!(count_canonical(1, 3).unwrap().c, BigUint::from(16u32));
        assert!(matches!(count_canonical(1, 1), Err(FinError::InvalidArity(_))));
        assert!(count_canonical(0, 2).is_err());
        // JSON keeps the big count as a decimal string.
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains(r#""c":"1""#));
        assert_eq!(serde_json::from_str::<CountReport>(&json).unwrap(), report);
    }

    #[test]
    fn applying_maps_shifts_sums_and_reads() {
        let base = make_sos(2, 2, false, 0).unwrap();
        let member = base.clone();
        let group =
            MapGroup::new(vec![0, 1], vec![1, 0], stair(2, "min{1}")).unwrap();
        let map = CanonicalMap::new(2, 2, vec![group]).unwrap();
        let image = apply_canonical(&map, &member).unwrap();
        // T¹ of the first block starts at 2; the min reading keeps it.
        assert_eq!(image, vec!["1:{2:1}".parse::<KVector>().unwrap()]);

        let constant = CanonicalMap::constant(2, 2).unwrap();
        assert!(apply_canonical(&constant, &member).unwrap().is_empty());
        assert!(matches!(
            apply_canonical(&map, &base.restrict(1).unwrap()),
            Err(FinError::InvalidArity(_))
        ));
        let wrong_level = make_sos(1, 2, false, 0).unwrap();
        assert!(matches!(
            apply_canonical(&map, &wrong_level),
            Err(FinError::LevelMismatch { .. })
        ));
    }

    #[test]
    fn map_validation_rejects_malformed_groups() {
        let g = stair(1, "min{1}");
        assert!(MapGroup::new(vec![], vec![], g.clone()).is_err());
        assert!(MapGroup::new(vec![1, 0], vec![0, 0], g.clone()).is_err());
        assert!(MapGroup::new(vec![0, 1], vec![0], g.clone()).is_err());
        assert!(MapGroup::new(vec![0], vec![0], stair(1, "const")).is_err());
        let zero_less = MapGroup::new(vec![0], vec![0], g.clone());
        assert!(zero_less.is_ok());
        // A level-1 group may not shift at all.
        let group = MapGroup::new(vec![0, 1], vec![1, 0], g.clone()).unwrap();
        assert!(CanonicalMap::new(1, 2, vec![group]).is_err());
        // Shared coordinates across groups are rejected.
        let a = MapGroup::new(vec![0], vec![0], g.clone()).unwrap();
        let b = MapGroup::new(vec![0], vec![0], g.clone()).unwrap();
        assert!(CanonicalMap::new(1, 2, vec![a.clone(), b]).is_err());
        // Groups out of least-coordinate order are rejected.
        let late = MapGroup::new(vec![1], vec![0], g).unwrap();
        assert!(CanonicalMap::new(1, 2, vec![late.clone(), a.clone()]).is_err());
        assert!(CanonicalMap::new(1, 2, vec![a, late]).is_ok());
    }

    #[test]
    fn maps_round_trip_as_json() {
        let maps = enumerate_canonical_maps(2, 2);
        let sample = &maps[maps.len() / 2];
        let json = serde_json::to_string(sample).unwrap();
        assert_eq!(&serde_json::from_str::<CanonicalMap>(&json).unwrap(), sample);
        // Validation runs on the way in.
        let bad = r#"{"level":1,"arity":2,"groups":[{"coords":[0],"shifts":[1],"g":{"level":1,"i0":[1],"theta0":[],"theta2":null,"i1":[],"theta1":[]}}]}"#;
        assert!(serde_json::from_str::<CanonicalMap>(bad).is_err());
    }

    #[test]
    fn canonize_finds_the_constant_and_union_maps() {
        // A constant coloring canonizes to the constant map on the first
        // inner universe.
        let base = make_sos(1, 3, false, 0).unwrap();
        let front = Front::uniform(base.clone(), 1).unwrap();
        let coloring = Coloring::new(front, ColorSource::Rule(ColorRule::Constant)).unwrap();
        match canonize(&coloring, &base, 1, CanonizeMode::Arity1).unwrap() {
            CanonizeOutcome::Found { y, map } => {
                assert_eq!(y, approximations(&base, 1).unwrap()[0]);
                assert!(map.is_constant());
            }
            other => panic!("expected a fit, got {other:?}"),
        }

        // The union coloring of pairs canonizes to the joint identity
        // reading on the first inner universe.
        let base = make_sos(1, 5, false, 0).unwrap();
        let front = Front::uniform(base.clone(), 2).unwrap();
        let coloring = Coloring::new(front, ColorSource::Rule(ColorRule::Union)).unwrap();
        match canonize(&coloring, &base, 3, CanonizeMode::General).unwrap() {
            CanonizeOutcome::Found { y, map } => {
                assert_eq!(y, approximations(&base, 3).unwrap()[0]);
                assert_eq!(map.groups().len(), 1);
                assert_eq!(map.groups()[0].coords(), &[0, 1]);
                assert_eq!(map.groups()[0].shifts(), &[0, 0]);
                assert_eq!(map.groups()[0].g(), &stair(1, "min{1} theta2{1} max{1}"));
            }
            other => panic!("expected a fit, got {other:?}"),
        }
    }

    #[test]
    fn canonize_validates_its_inputs() {
        let base = make_sos(1, 3, false, 0).unwrap();
        let front = Front::uniform(base.clone(), 1).unwrap();
        let coloring =
            Coloring::new(front.clone(), ColorSource::Rule(ColorRule::Constant)).unwrap();
        // Universe mismatch between coloring and argument.
        let other = make_sos(1, 4, false, 0).unwrap();
        assert!(matches!(
            canonize(&coloring, &other, 1, CanonizeMode::Arity1),
            Err(FinError::FrontMismatch(_))
        ));
        // Unit blocks are not staircase systems.
        let units = BlockSequence::units(3);
        let unit_front = Front::uniform(units.clone(), 1).unwrap();
        let unit_coloring =
            Coloring::new(unit_front, ColorSource::Rule(ColorRule::Constant)).unwrap();
        assert!(matches!(
            canonize(&unit_coloring, &units, 1, CanonizeMode::Arity1),
            Err(FinError::InvalidInput(_))
        ));
        // Arity-1 mode rejects wider fronts.
        let pair_front = Front::uniform(base.clone(), 2).unwrap();
        let pair_coloring =
            Coloring::new(pair_front, ColorSource::Rule(ColorRule::Union)).unwrap();
        assert!(matches!(
            canonize(&pair_coloring, &base, 2, CanonizeMode::Arity1),
            Err(FinError::InvalidArity(_))
        ));
        // Target length out of range.
        assert!(canonize(&coloring, &base, 0, CanonizeMode::Arity1).is_err());
        assert!(canonize(&coloring, &base, 4, CanonizeMode::Arity1).is_err());
        // Mixed member lengths have no arity.
        let mixed = Front::explicit(
            base.clone(),
            vec![base.restrict(1).unwrap(), base.restrict(2).unwrap()],
        )
        .unwrap();
        let mixed_coloring =
            Coloring::new(mixed, ColorSource::Rule(ColorRule::Constant)).unwrap();
        assert!(matches!(
            canonize(&mixed_coloring, &base, 2, CanonizeMode::General),
            Err(FinError::NonUniformFront)
        ));
    }
}
