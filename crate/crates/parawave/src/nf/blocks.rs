use std::collections::HashMap;

use crate::paracalc::DELTA0;
use crate::spectral::GridField;

use super::{NfError, NfParams};

/// Disjoint cover `{Ω_α}` of a lattice ball by connected components of the
/// normal-form coupling graph, with the low-frequency core merged into `Ω₀`.
pub struct BlockPartition {
    pub ball_radius: i64,
    /// `blocks[0]` is the merged core Ω₀.
    pub blocks: Vec<Vec<(i64, i64)>>,
    pub block_of: HashMap<(i64, i64), usize>,
    /// `M_α = max_{ξ∈Ω_α} |ξ|`.
    pub max_freq: Vec<f64>,
    /// Reported containment radius of Ω₀.
    pub r0: f64,
    /// Blocks α ≥ 1 violating the dyadic bound `M_α ≤ 2 min |ξ|` (reported,
    /// not repaired).
    pub dyadic_violations: Vec<usize>,
}

/// Admissible normal-form coupling between `j` and `j' = j + k`: the symbol
/// support conditions `|k| ≤ ⟨ξ_m⟩^ν`, `|k·ξ_m| ≤ ⟨ξ_m⟩^δ |k|^{−τ}` together
/// with the quantization cutoff support `|k| ≤ δ₀⟨ξ_m⟩`, at `ξ_m = (j+j')/2`.
pub fn admissible_coupling(j: (i64, i64), jp: (i64, i64), p: &NfParams) -> bool {
    let k = (jp.0 - j.0, jp.1 - j.1);
    if k == (0, 0) {
        return false;
    }
    let kn = ((k.0 * k.0 + k.1 * k.1) as f64).sqrt();
    let mid = [(j.0 + jp.0) as f64 / 2.0, (j.1 + jp.1) as f64 / 2.0];
    let bracket = (1.0 + mid[0] * mid[0] + mid[1] * mid[1]).sqrt();
    if kn > bracket.powf(p.nu) || kn > DELTA0 * bracket {
        return false;
    }
    let dot = (k.0 as f64 * mid[0] + k.1 as f64 * mid[1]).abs();
    dot <= bracket.powf(p.delta) * kn.powf(-p.tau)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }
    fn find(&mut self, i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = i;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn block_partition(p: &NfParams, ball_radius: i64) -> BlockPartition {
    let mut points: Vec<(i64, i64)> = Vec::new();
    for j1 in -ball_radius..=ball_radius {
        for j2 in -ball_radius..=ball_radius {
            if j1 * j1 + j2 * j2 <= ball_radius * ball_radius {
                points.push((j1, j2));
            }
        }
    }
    let index: HashMap<(i64, i64), usize> =
        points.iter().enumerate().map(|(i, &j)| (j, i)).collect();
    let mut uf = UnionFind::new(points.len());
    // couplings have |k| ≤ ⟨ξ_m⟩^ν ≤ ⟨√2·ball⟩^ν, a small constant radius
    let k_bound = (1.0 + 2.0 * (ball_radius as f64 + 1.0).powi(2))
        .sqrt()
        .powf(p.nu)
        .ceil() as i64;
    for (i, &j) in points.iter().enumerate() {
        for k1 in -k_bound..=k_bound {
            for k2 in -k_bound..=k_bound {
                if (k1, k2) == (0, 0) {
                    continue;
                }
                let jp = (j.0 + k1, j.1 + k2);
                let Some(&ip) = index.get(&jp) else { continue };
                if ip <= i {
                    continue;
                }
                if admissible_coupling(j, jp, p) {
                    uf.union(i, ip);
                }
            }
        }
    }
    // gather components
    let mut comp_of = vec![0usize; points.len()];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_to_comp: HashMap<usize, usize> = HashMap::new();
    for i in 0..points.len() {
        let root = uf.find(i);
        let c = *root_to_comp.entry(root).or_insert_with(|| {
            comps.push(Vec::new());
            comps.len() - 1
        });
        comps[c].push(i);
        comp_of[i] = c;
    }
    let norm = |j: (i64, i64)| ((j.0 * j.0 + j.1 * j.1) as f64).sqrt();

    // Scan the core radius upward: a radius is admissible while no
    // multi-element component crosses B(r) with a single element inside.
    // The first failure caps the merged core.
    let mut r0_scan = 1i64;
    'scan: for r in 1..=ball_radius {
        for comp in &comps {
            if comp.len() < 2 {
                continue;
            }
            let inside =
                comp.iter().filter(|&&i| norm(points[i]) <= r as f64).count();
            if inside == 1 {
                break 'scan;
            }
        }
        r0_scan = r;
    }
    // merge every component meeting B(r0_scan) into Ω₀
    let mut merged = vec![false; comps.len()];
    for (c, comp) in comps.iter().enumerate() {
        if comp.iter().any(|&i| norm(points[i]) <= r0_scan as f64) {
            merged[c] = true;
        }
    }
    let mut blocks: Vec<Vec<(i64, i64)>> = vec![Vec::new()];
    for (c, comp) in comps.iter().enumerate() {
        if merged[c] {
            blocks[0].extend(comp.iter().map(|&i| points[i]));
        }
    }
    for (c, comp) in comps.iter().enumerate() {
        if !merged[c] {
            let mut block: Vec<(i64, i64)> = comp.iter().map(|&i| points[i]).collect();
            block.sort_unstable();
            blocks.push(block);
        }
    }
    blocks[0].sort_unstable();
    let r0 = blocks[0].iter().map(|&j| norm(j)).fold(r0_scan as f64, f64::max);

    let mut block_of = HashMap::new();
    let mut max_freq = Vec::with_capacity(blocks.len());
    let mut dyadic_violations = Vec::new();
    for (alpha, block) in blocks.iter().enumerate() {
        let mut mx = 0.0f64;
        let mut mn = f64::INFINITY;
        for &j in block {
            block_of.insert(j, alpha);
            let n = norm(j);
            mx = mx.max(n);
            mn = mn.min(n);
        }
        max_freq.push(mx);
        if alpha >= 1 && mx > 2.0 * mn {
            dyadic_violations.push(alpha);
        }
    }
    BlockPartition { ball_radius, blocks, block_of, max_freq, r0, dyadic_violations }
}

impl BlockPartition {
    /// Indices of blocks meeting the ball `B(1/ε)`.
    pub fn active_set(&self, eps: f64) -> Vec<usize> {
        let cut = 1.0 / eps;
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| {
                b.iter().any(|&j| ((j.0 * j.0 + j.1 * j.1) as f64).sqrt() <= cut)
            })
            .map(|(a, _)| a)
            .collect()
    }

    /// Plain-text export: lines `alpha j1 j2`.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for (alpha, block) in self.blocks.iter().enumerate() {
            for j in block {
                out.push_str(&format!("{} {} {}\n", alpha, j.0, j.1));
            }
        }
        out
    }
}

/// Block-invariant modified Sobolev energy
/// `E^(s)(u) = Σ_{α∈I_ε} M_α^{2s} ‖Π_{Ω_α} u‖²_{L²}`.
pub fn low_energy(
    u: &GridField,
    s: f64,
    eps: f64,
    partition: &BlockPartition,
) -> Result<f64, NfError> {
    if (partition.ball_radius as f64) < 2.0 / eps {
        return Err(NfError::PartitionTooSmall {
            ball: partition.ball_radius,
            needed: 2.0 / eps,
        });
    }
    let active = partition.active_set(eps);
    let mut total = 0.0;
    for alpha in active {
        let mut l2 = 0.0;
        for &j in &partition.blocks[alpha] {
            l2 += u.coeff(j).norm_sqr();
        }
        total += partition.max_freq[alpha].powf(2.0 * s) * l2;
    }
    Ok(total)
}
