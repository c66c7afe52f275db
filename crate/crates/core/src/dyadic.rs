//! Christ–David style dyadic cubes on a finite space, built from nested greedy
//! nets.
//!
//! Level `j` has side length `ℓ = 2^{-j}`. Centers at level `j` form a maximal
//! `2^{-j-1}`-separated set containing the centers of level `j-1`; each center
//! is attached to the nearest coarser center. A point belongs to the cube of
//! its ancestor chain, so partitions, nesting and unique ancestors hold by
//! construction. The diameter and inner-ball properties are checked afterwards
//! and the best constant `c₀` is recorded.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{MetricSpace, PointSet};

pub type CubeId = usize;

/// Safety cap on the number of levels below the root.
const MAX_DEPTH: i32 = 80;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cube {
    pub id: CubeId,
    pub level: i32,
    pub center: usize,
    pub members: PointSet,
    pub mass: f64,
    pub diam: f64,
    pub parent: Option<CubeId>,
    pub children: Vec<CubeId>,
}

impl Cube {
    pub fn side(&self) -> f64 {
        side(self.level)
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }

    /// Members are stored in ascending order.
    pub fn contains(&self, p: usize) -> bool {
        self.members.ids().binary_search(&p).is_ok()
    }
}

#[inline]
pub fn side(level: i32) -> f64 {
    (-(level as f64)).exp2()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicSystem {
    pub j_min: i32,
    pub j_max: i32,
    pub c0: f64,
    /// `levels[j - j_min]` lists the cubes of level `j` in ascending center id.
    pub levels: Vec<Vec<CubeId>>,
    pub cubes: Vec<Cube>,
}

/// Builds the system with the ascending-id greedy order.
pub fn build_dyadic(space: &MetricSpace) -> DyadicSystem {
    let order: Vec<usize> = (0..space.len()).collect();
    build_with_order(space, &order)
}

/// Same construction with the greedy scan order shuffled by `seed`; used to
/// compare Carleson constants across different admissible systems.
pub fn build_dyadic_seeded(space: &MetricSpace, seed: u64) -> DyadicSystem {
    let mut order: Vec<usize> = (0..space.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    build_with_order(space, &order)
}

fn build_with_order(space: &MetricSpace, order: &[usize]) -> DyadicSystem {
    let n = space.len();
    let all: Vec<usize> = (0..n).collect();
    let diam = space.diam_of(&all);
    let j_min = if diam > 0.0 { (-diam.log2()).ceil() as i32 } else { 0 };
    let j_min = if diam > 0.0 && side(j_min) > diam { j_min + 1 } else { j_min };

    // 1-center of the whole space, ties to the smaller id
    let root_center = (0..n)
        .map(|i| (i, (0..n).map(|k| space.dist(i, k)).fold(0.0, f64::max)))
        .fold((0usize, f64::INFINITY), |acc, (i, r)| if r < acc.1 { (i, r) } else { acc })
        .0;

    // centers per level and parent map (center at level j -> center at level j-1)
    let mut is_center = vec![false; n];
    is_center[root_center] = true;
    let mut centers: Vec<Vec<usize>> = vec![vec![root_center]];
    let mut parents: Vec<Vec<usize>> = vec![vec![usize::MAX; n]];
    let mut count = 1;
    let mut j = j_min;
    while count < n && j - j_min < MAX_DEPTH {
        j += 1;
        let sep = 0.5 * side(j);
        let mut cur = centers.last().unwrap().clone();
        for &p in order {
            if is_center[p] {
                continue;
            }
            if cur.iter().all(|&c| space.dist(p, c) >= sep) {
                cur.push(p);
                is_center[p] = true;
                count += 1;
            }
        }
        let prev = centers.last().unwrap();
        let mut par = vec![usize::MAX; n];
        for &c in &cur {
            par[c] = nearest(space, c, prev);
        }
        cur.sort_unstable();
        centers.push(cur);
        parents.push(par);
    }
    let j_max = j;

    // cube of each point per level: top-down via ancestor chains
    let depth = centers.len();
    let mut owner = vec![vec![0usize; n]; depth];
    // the finest level has every point as a center unless the depth cap was hit
    for p in 0..n {
        let mut c = if is_center[p] { p } else { nearest(space, p, &centers[depth - 1]) };
        owner[depth - 1][p] = c;
        for l in (0..depth - 1).rev() {
            c = parents[l + 1][c];
            owner[l][p] = c;
        }
    }
    let mut cubes: Vec<Cube> = Vec::new();
    let mut levels: Vec<Vec<CubeId>> = Vec::with_capacity(depth);
    let mut index_of: Vec<std::collections::HashMap<usize, CubeId>> = Vec::with_capacity(depth);
    for l in 0..depth {
        let mut map = std::collections::HashMap::new();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); centers[l].len()];
        let pos: std::collections::HashMap<usize, usize> =
            centers[l].iter().enumerate().map(|(k, &c)| (c, k)).collect();
        for p in 0..n {
            members[pos[&owner[l][p]]].push(p);
        }
        let mut ids = Vec::with_capacity(centers[l].len());
        for (k, &c) in centers[l].iter().enumerate() {
            let m = std::mem::take(&mut members[k]);
            if m.is_empty() {
                continue;
            }
            let id = cubes.len();
            let parent = if l == 0 { None } else { Some(index_of[l - 1][&owner[l - 1][c]]) };
            if let Some(pid) = parent {
                cubes[pid].children.push(id);
            }
            cubes.push(Cube {
                id,
                level: j_min + l as i32,
                center: c,
                mass: space.mass(&m),
                diam: space.diam_of(&m),
                members: PointSet::from_sorted_unchecked(m),
                parent,
                children: Vec::new(),
            });
            map.insert(c, id);
            ids.push(id);
        }
        levels.push(ids);
        index_of.push(map);
    }

    let mut sys = DyadicSystem { j_min, j_max, c0: 1.0, levels, cubes };
    sys.c0 = sys.achieved_c0(space);
    sys
}

fn nearest(space: &MetricSpace, p: usize, among: &[usize]) -> usize {
    let mut best = (usize::MAX, f64::INFINITY);
    for &c in among {
        let d = space.dist(p, c);
        if d < best.1 || (d == best.1 && c < best.0) {
            best = (c, d);
        }
    }
    best.0
}

/// Outcome of [`DyadicSystem::verify`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicCheck {
    pub levels: usize,
    pub cubes: usize,
    pub c0: f64,
    /// `max card(F_j(Q)) / 2^{s j}` over all cubes and depths.
    pub card_constant: f64,
}

/// Empirical ball-to-cube enlargement factor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallCoverReport {
    /// Largest `K` needed among cases with `diam(Q) > 0`.
    pub k_max: f64,
    pub checked: usize,
    /// Balls with more than one point whose matching cube is a singleton.
    pub infinite_cases: usize,
}

impl DyadicSystem {
    pub fn cube(&self, id: CubeId) -> &Cube {
        &self.cubes[id]
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn root(&self) -> CubeId {
        self.levels[0][0]
    }

    pub fn level(&self, j: i32) -> &[CubeId] {
        if j < self.j_min || j > self.j_max {
            return &[];
        }
        &self.levels[(j - self.j_min) as usize]
    }

    /// The cube of level `j` containing point `p`.
    pub fn cube_of(&self, p: usize, j: i32) -> Option<CubeId> {
        let mut id = self.root();
        if j < self.j_min {
            return None;
        }
        while self.cubes[id].level < j {
            id = *self.cubes[id].children.iter().find(|&&c| self.cubes[c].contains(p))?;
        }
        Some(id)
    }

    /// `KQ = {x : dist(x, Q) ≤ (K − 1) diam(Q)}`.
    pub fn enlarge(&self, space: &MetricSpace, q: CubeId, k: f64) -> Result<PointSet> {
        if !(k >= 1.0) {
            return Err(Error::Domain(format!("enlargement factor must be ≥ 1, got {k}")));
        }
        let cube = self.cubes.get(q).ok_or_else(|| Error::Domain(format!("no cube {q}")))?;
        let radius = (k - 1.0) * cube.diam;
        if radius == 0.0 {
            return Ok(cube.members.clone());
        }
        let ids = (0..space.len())
            .filter(|&x| cube.contains(x) || cube.members.iter().any(|y| space.dist(x, y) <= radius))
            .collect();
        Ok(PointSet::from_sorted_unchecked(ids))
    }

    /// `F_j(Q)`: descendants `j` levels below `Q`.
    pub fn descendants(&self, q: CubeId, j: u32) -> Result<Vec<&Cube>> {
        let cube = self.cubes.get(q).ok_or_else(|| Error::Domain(format!("no cube {q}")))?;
        if cube.level as i64 + j as i64 > self.j_max as i64 {
            return Err(Error::Domain(format!("level {} + {j} exceeds j_max = {}", cube.level, self.j_max)));
        }
        let mut frontier = vec![q];
        for _ in 0..j {
            frontier = frontier.iter().flat_map(|&c| self.cubes[c].children.iter().copied()).collect();
        }
        Ok(frontier.into_iter().map(|c| &self.cubes[c]).collect())
    }

    /// All cubes contained in `q`, including `q`, in level order.
    pub fn subtree(&self, q: CubeId) -> Vec<CubeId> {
        let mut out = vec![q];
        let mut k = 0;
        while k < out.len() {
            out.extend(self.cubes[out[k]].children.iter().copied());
            k += 1;
        }
        out
    }

    fn achieved_c0(&self, space: &MetricSpace) -> f64 {
        let mut c0: f64 = 1.0;
        for cube in &self.cubes {
            let l = cube.side();
            if cube.diam > 0.0 {
                c0 = c0.min(l / cube.diam);
            }
            let outside = (0..space.len())
                .filter(|&x| !cube.contains(x))
                .map(|x| space.dist(cube.center, x))
                .fold(f64::INFINITY, f64::min);
            if outside.is_finite() {
                c0 = c0.min(outside / l);
            }
        }
        c0
    }

    /// Exact check of partition, nesting, unique ancestors, diameter bound
    /// `diam(Q) ≤ ℓ/c₀` and inner balls `B(x_Q, c₀ℓ) ∩ E ⊆ Q`.
    pub fn verify(&self, space: &MetricSpace) -> Result<DyadicCheck> {
        let n = space.len();
        let fail = |m: String| Err(Error::Postcondition(m));
        for (l, ids) in self.levels.iter().enumerate() {
            let mut seen = vec![false; n];
            for &id in ids {
                let cube = &self.cubes[id];
                if cube.level != self.j_min + l as i32 {
                    return fail(format!("cube {id} filed under the wrong level"));
                }
                for p in cube.members.iter() {
                    if seen[p] {
                        return fail(format!("point {p} in two cubes at level {}", cube.level));
                    }
                    seen[p] = true;
                }
                if let Some(pid) = cube.parent {
                    let parent = &self.cubes[pid];
                    if parent.level != cube.level - 1 || !cube.members.iter().all(|p| parent.contains(p)) {
                        return fail(format!("cube {id} not nested in its parent"));
                    }
                } else if l != 0 {
                    return fail(format!("cube {id} has no parent"));
                }
                let child_mass: f64 = cube.children.iter().map(|&c| self.cubes[c].mass).sum();
                if !cube.children.is_empty() && (child_mass - cube.mass).abs() > 1e-12 * cube.mass.max(1.0) {
                    return fail(format!("children masses of cube {id} do not sum to its mass"));
                }
                let l_side = cube.side();
                if cube.diam > l_side / self.c0 * (1.0 + 1e-12) {
                    return fail(format!("diam bound fails on cube {id}"));
                }
                let r = self.c0 * l_side;
                for x in 0..n {
                    if space.dist(cube.center, x) < r && !cube.contains(x) {
                        return fail(format!("inner ball of cube {id} leaks point {x}"));
                    }
                }
            }
            if seen.iter().any(|s| !s) {
                return fail(format!("level {} does not cover every point", self.j_min + l as i32));
            }
        }
        if self.levels.last().is_some_and(|ids| ids.iter().any(|&c| !self.cubes[c].is_singleton())) {
            return fail("finest level is not made of singletons".into());
        }
        Ok(DyadicCheck {
            levels: self.levels.len(),
            cubes: self.cubes.len(),
            c0: self.c0,
            card_constant: self.card_constant(space.s()),
        })
    }

    /// `max_{Q, j} card(F_j(Q)) / 2^{s j}`.
    pub fn card_constant(&self, s: f64) -> f64 {
        let mut best: f64 = 0.0;
        for cube in &self.cubes {
            let mut frontier = vec![cube.id];
            let mut j = 0;
            while !frontier.is_empty() {
                best = best.max(frontier.len() as f64 / (s * j as f64).exp2());
                frontier = frontier.iter().flat_map(|&c| self.cubes[c].children.iter().copied()).collect();
                j += 1;
            }
        }
        best
    }

    /// For every point `z` and every level radius `R = 2^{-j} < diam(E)`, the
    /// smallest `K` with `E ∩ B(z, R) ⊆ KQ`, `Q` the level-`j` cube of `z`.
    pub fn ball_cover(&self, space: &MetricSpace) -> BallCoverReport {
        let n = space.len();
        let diam = self.cubes[self.root()].diam;
        let mut rep = BallCoverReport { k_max: 1.0, checked: 0, infinite_cases: 0 };
        for j in self.j_min..=self.j_max {
            let r = side(j);
            if r >= diam {
                continue;
            }
            for z in 0..n {
                let q = &self.cubes[self.cube_of(z, j).expect("every point has a cube per level")];
                rep.checked += 1;
                let far = (0..n)
                    .filter(|&y| space.dist(z, y) < r)
                    .map(|y| q.members.iter().map(|m| space.dist(y, m)).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max);
                if far == 0.0 {
                    continue;
                }
                if q.diam == 0.0 {
                    rep.infinite_cases += 1;
                } else {
                    rep.k_max = rep.k_max.max(1.0 + far / q.diam);
                }
            }
        }
        rep
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
