//! Clustering of granular balls by local quality peaks.
//!
//! Balls are linked to their `k` nearest peers. A ball's relative quality is
//! its quality over the mean quality of those peers, and each ball points at
//! the geodesically nearest ball of higher relative quality. Balls far from
//! anything better, and good in their own right, become centers; the rest
//! follow their pointers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::{gap, gbdpc_density, GranularBall};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::generation::{generate, AbnormalPolicy, GenerationConfig, GenerationStats};
use crate::quality::{quality, QualityConfig};
use crate::scalar::Scalar;

/// Directed k-nearest-neighbor graph over balls, weighted by ball distance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnnGraph<T> {
    out_edges: Vec<Vec<(usize, T)>>,
    k: usize,
}

impl<T: Scalar> KnnGraph<T> {
    /// Neighbors sorted by distance, ties to the lower index; `k` is clamped
    /// to `p - 1`.
    pub fn build(balls: &[GranularBall<T>], k: usize) -> Result<Self> {
        let p = balls.len();
        if p < 2 {
            return Err(Error::TooFewBalls(p));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if let Some(b) = balls.iter().find(|b| b.dim() != balls[0].dim()) {
            return Err(Error::DimensionMismatch {
                left: balls[0].dim(),
                right: b.dim(),
            });
        }
        let k = k.min(p - 1);
        let out_edges = (0..p)
            .into_par_iter()
            .map(|i| {
                let mut cand: Vec<(usize, T)> = (0..p)
                    .filter(|&j| j != i)
                    .map(|j| (j, gap(&balls[i], &balls[j])))
                    .collect();
                cand.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
                cand.truncate(k);
                cand
            })
            .collect();
        Ok(Self { out_edges, k })
    }

    /// Graph from explicit out-edges. Weights must be non-negative.
    pub fn from_edges(out_edges: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let p = out_edges.len();
        for (i, edges) in out_edges.iter().enumerate() {
            for &(j, w) in edges {
                if j >= p || j == i {
                    return Err(Error::IndexOutOfRange { index: j, n: p });
                }
                if !w.is_finite() || w < T::zero() {
                    return Err(Error::InvalidParameter(format!("edge weight {w} on {i}->{j}")));
                }
            }
        }
        let k = out_edges.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self { out_edges, k })
    }

    pub fn len(&self) -> usize {
        self.out_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out_edges.is_empty()
    }

    /// Effective neighbor count after clamping.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn out_edges(&self, i: usize) -> &[(usize, T)] {
        &self.out_edges[i]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(i, e)| e.iter().map(move |&(j, w)| (i, j, w)))
    }

    fn undirected(&self) -> Vec<Vec<(usize, T)>> {
        let mut adj = self.out_edges.clone();
        for (i, j, w) in self.edges() {
            adj[j].push((i, w));
        }
        adj
    }
}

/// Quality over the mean quality of the out-neighbors. A ball without
/// neighbors gets 1.
pub fn relative_quality<T: Scalar>(g: &KnnGraph<T>, qualities: &[T]) -> Vec<T> {
    assert_eq!(g.len(), qualities.len());
    (0..g.len())
        .map(|i| {
            let e = g.out_edges(i);
            if e.is_empty() {
                return T::one();
            }
            let mean = e.iter().map(|&(j, _)| qualities[j]).sum::<T>() / T::from_count(e.len());
            qualities[i] / mean
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier<T> {
    dist: T,
    node: usize,
}

impl<T: PartialOrd> Eq for Frontier<T> {}

impl<T: PartialOrd> Ord for Frontier<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl<T: PartialOrd> PartialOrd for Frontier<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra<T: Scalar>(adj: &[Vec<(usize, T)>], source: usize) -> Vec<T> {
    let mut dist = vec![T::infinity(); adj.len()];
    dist[source] = T::zero();
    let mut heap = BinaryHeap::from([Frontier {
        dist: T::zero(),
        node: source,
    }]);
    while let Some(Frontier { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            let nd = d + w;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(Frontier { dist: nd, node: next });
            }
        }
    }
    dist
}

/// Shortest-path lengths over the graph with every edge usable both ways.
/// Unreachable pairs are `+inf`.
pub fn geodesic_all_pairs<T: Scalar>(g: &KnnGraph<T>) -> Vec<Vec<T>> {
    let adj = g.undirected();
    (0..g.len()).into_par_iter().map(|s| dijkstra(&adj, s)).collect()
}

/// Plain ball-distance matrix.
pub fn direct_distances<T: Scalar>(balls: &[GranularBall<T>]) -> Vec<Vec<T>> {
    (0..balls.len())
        .into_par_iter()
        .map(|i| {
            (0..balls.len())
                .map(|j| if i == j { T::zero() } else { gap(&balls[i], &balls[j]) })
                .collect()
        })
        .collect()
}

/// Distance to, and index of, the nearest reachable ball of strictly higher
/// score. Balls with none point at themselves and take their largest finite
/// distance (0 when isolated).
pub fn relative_geodesic<T: Scalar>(scores: &[T], dist: &[Vec<T>]) -> (Vec<T>, Vec<usize>) {
    let p = scores.len();
    let mut d_rg = Vec::with_capacity(p);
    let mut n_r = Vec::with_capacity(p);
    for i in 0..p {
        let mut best: Option<(T, usize)> = None;
        let mut ecc = T::zero();
        for j in 0..p {
            let dij = dist[i][j];
            if !dij.is_finite() {
                continue;
            }
            if dij > ecc {
                ecc = dij;
            }
            if scores[j] > scores[i] && best.is_none_or(|(bd, _)| dij < bd) {
                best = Some((dij, j));
            }
        }
        match best {
            Some((bd, j)) => {
                d_rg.push(bd);
                n_r.push(j);
            }
            None => {
                d_rg.push(ecc);
                n_r.push(i);
            }
        }
    }
    (d_rg, n_r)
}

pub fn decision_values<T: Scalar>(scores: &[T], d_rg: &[T]) -> Vec<T> {
    scores.iter().zip(d_rg).map(|(&s, &d)| s * d).collect()
}

/// Ball indices by decision value descending, then score descending, then index.
pub fn center_order<T: Scalar>(dv: &[T], scores: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dv.len()).collect();
    order.sort_by(|&a, &b| {
        dv[b]
            .partial_cmp(&dv[a])
            .unwrap_or(Ordering::Equal)
            .then(scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    order
}

/// Labels balls `1..=c`. Returns per-ball labels and the centers in label order.
///
/// `fallback` gives a distance used when a stranded ball has no finite
/// distance to any center.
pub fn assign_labels<T: Scalar>(
    dv: &[T],
    scores: &[T],
    n_r: &[usize],
    dist: &[Vec<T>],
    c: usize,
    fallback: impl Fn(usize, usize) -> T,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let p = dv.len();
    if c == 0 {
        return Err(Error::InvalidParameter("cluster count must be at least 1".into()));
    }
    if c > p {
        return Err(Error::TooFewBallsForClusters { clusters: c, balls: p });
    }
    let centers: Vec<usize> = center_order(dv, scores).into_iter().take(c).collect();
    let mut labels = vec![0usize; p];
    for (l, &ctr) in centers.iter().enumerate() {
        labels[ctr] = l + 1;
    }

    let nearest_center = |i: usize| -> usize {
        let pick = |d: &dyn Fn(usize) -> T| {
            centers
                .iter()
                .map(|&ctr| (d(ctr), ctr))
                .filter(|(v, _)| v.is_finite())
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)))
                .map(|(_, ctr)| ctr)
        };
        pick(&|ctr| dist[i][ctr])
            .or_else(|| pick(&|ctr| fallback(i, ctr)))
            .unwrap_or(centers[0])
    };

    let mut path = Vec::new();
    for start in 0..p {
        let mut cur = start;
        while labels[cur] == 0 {
            path.push(cur);
            let next = n_r[cur];
            if next == cur {
                let ctr = nearest_center(cur);
                labels[cur] = labels[ctr];
                break;
            }
            cur = next;
        }
        let label = labels[cur];
        for v in path.drain(..) {
            labels[v] = label;
        }
    }
    Ok((labels, centers))
}

/// Which per-ball score drives center selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityEstimator {
    /// Quality relative to the k-NN neighborhood.
    #[default]
    RelativeQuality,
    /// Size over `R_ave * R_max^2`, relative to the neighborhood.
    RelativeGbdpc,
    /// Quality itself.
    RawQuality,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    #[default]
    Geodesic,
    /// Ball distance without the graph.
    Direct,
}

/// Switches on the clustering half.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ablation {
    pub density: DensityEstimator,
    pub distance: DistanceMode,
}

/// Full method and its eight ablated variants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Full,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
    V7,
    V8,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Full,
        Variant::V1,
        Variant::V2,
        Variant::V3,
        Variant::V4,
        Variant::V5,
        Variant::V6,
        Variant::V7,
        Variant::V8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::V1 => "v1",
            Variant::V2 => "v2",
            Variant::V3 => "v3",
            Variant::V4 => "v4",
            Variant::V5 => "v5",
            Variant::V6 => "v6",
            Variant::V7 => "v7",
            Variant::V8 => "v8",
        }
    }

    pub fn policy(self) -> AbnormalPolicy {
        match self {
            Variant::V1 => AbnormalPolicy::Jia,
            Variant::V2 => AbnormalPolicy::XieTkde,
            Variant::V3 => AbnormalPolicy::XieIcde,
            Variant::V4 => AbnormalPolicy::Combined,
            Variant::V5 => AbnormalPolicy::None,
            _ => AbnormalPolicy::PojgPlus,
        }
    }

    pub fn ablation(self) -> Ablation {
        match self {
            Variant::V6 => Ablation {
                density: DensityEstimator::RelativeGbdpc,
                ..Ablation::default()
            },
            Variant::V7 => Ablation {
                density: DensityEstimator::RawQuality,
                ..Ablation::default()
            },
            Variant::V8 => Ablation {
                distance: DistanceMode::Direct,
                ..Ablation::default()
            },
            _ => Ablation::default(),
        }
    }

    /// Applies the variant's policy and switches to a base configuration.
    pub fn configure<T: Scalar>(self, base: &ClusterConfig<T>) -> ClusterConfig<T> {
        let mut cfg = *base;
        cfg.generation.policy = self.policy();
        cfg.ablation = self.ablation();
        cfg
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig<T> {
    pub clusters: usize,
    pub k: usize,
    pub generation: GenerationConfig<T>,
    pub ablation: Ablation,
}

impl<T: Scalar> ClusterConfig<T> {
    pub fn new(clusters: usize, lambda: T, k: usize) -> Self {
        Self {
            clusters,
            k,
            generation: GenerationConfig::new(lambda),
            ablation: Ablation::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ClusterTimings {
    pub seconds_generation: f64,
    pub seconds_graph: f64,
    pub seconds_distances: f64,
    pub seconds_assignment: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusteringResult<T> {
    /// Cluster id per ball, `1..=c`.
    pub ball_labels: Vec<usize>,
    /// Cluster id per instance, `1..=c`.
    pub instance_labels: Vec<usize>,
    /// Center ball per label; `centers[l - 1]` carries label `l`.
    pub centers: Vec<usize>,
    pub balls: Vec<GranularBall<T>>,
    pub quality: Vec<T>,
    /// Score used for center selection (relative quality unless ablated).
    pub relative_quality: Vec<T>,
    pub relative_distance: Vec<T>,
    pub relative_neighbor: Vec<usize>,
    pub decision_value: Vec<T>,
    /// Directed neighbor edges `(source, target, weight)`; empty for a single ball.
    pub edges: Vec<(usize, usize, T)>,
    pub gamma: T,
    pub lambda: T,
    pub k: usize,
    pub generation: Option<GenerationStats>,
    pub timings: ClusterTimings,
}

impl<T> ClusteringResult<T> {
    pub fn ball_count(&self) -> usize {
        self.balls.len()
    }
}

/// Per-ball density for the GBDPC ablation. Zero radii are floored at the
/// smallest positive radius present; if no ball has a positive radius the
/// size is used directly.
pub fn guarded_gbdpc_densities<T: Scalar>(balls: &[GranularBall<T>]) -> Vec<T> {
    let floor = |f: fn(&GranularBall<T>) -> T| {
        balls
            .iter()
            .map(f)
            .filter(|&r| r > T::zero())
            .fold(None, |acc: Option<T>, r| Some(acc.map_or(r, |a| a.min(r))))
    };
    let (Some(avg_floor), Some(max_floor)) = (floor(|b| b.avg_radius()), floor(|b| b.max_radius())) else {
        return balls.iter().map(|b| T::from_count(b.len())).collect();
    };
    balls
        .iter()
        .map(|b| {
            gbdpc_density(b).unwrap_or_else(|_| {
                let ra = b.avg_radius().max(avg_floor);
                let rm = b.max_radius().max(max_floor);
                T::from_count(b.len()) / (ra * rm * rm)
            })
        })
        .collect()
}

/// Clusters an already generated ball set.
pub fn cluster_balls<T: Scalar>(
    n: usize,
    balls: Vec<GranularBall<T>>,
    qcfg: &QualityConfig<T>,
    clusters: usize,
    k: usize,
    ablation: Ablation,
) -> Result<ClusteringResult<T>> {
    let p = balls.len();
    if clusters == 0 {
        return Err(Error::InvalidParameter("cluster count must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if p < clusters {
        return Err(Error::TooFewBallsForClusters { clusters, balls: p });
    }
    let mut timings = ClusterTimings::default();
    let qualities: Vec<T> = balls.iter().map(|b| quality(b, qcfg)).collect();

    let t0 = Instant::now();
    let graph = if p >= 2 {
        Some(KnnGraph::build(&balls, k)?)
    } else {
        None
    };
    let scores = match (&graph, ablation.density) {
        (_, DensityEstimator::RawQuality) => qualities.clone(),
        (None, _) => vec![T::one(); p],
        (Some(g), DensityEstimator::RelativeQuality) => relative_quality(g, &qualities),
        (Some(g), DensityEstimator::RelativeGbdpc) => relative_quality(g, &guarded_gbdpc_densities(&balls)),
    };
    timings.seconds_graph = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let dist = match (&graph, ablation.distance) {
        (Some(g), DistanceMode::Geodesic) => geodesic_all_pairs(g),
        _ => direct_distances(&balls),
    };
    timings.seconds_distances = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let (d_rg, n_r) = relative_geodesic(&scores, &dist);
    let dv = decision_values(&scores, &d_rg);
    let (ball_labels, centers) = assign_labels(&dv, &scores, &n_r, &dist, clusters, |i, j| gap(&balls[i], &balls[j]))?;
    let mut instance_labels = vec![0usize; n];
    for (b, &l) in balls.iter().zip(&ball_labels) {
        for &i in b.members() {
            instance_labels[i] = l;
        }
    }
    timings.seconds_assignment = t2.elapsed().as_secs_f64();

    Ok(ClusteringResult {
        ball_labels,
        instance_labels,
        centers,
        quality: qualities,
        relative_quality: scores,
        relative_distance: d_rg,
        relative_neighbor: n_r,
        decision_value: dv,
        edges: graph.as_ref().map(|g| g.edges().collect()).unwrap_or_default(),
        balls,
        gamma: qcfg.gamma,
        lambda: T::zero(),
        k: graph.as_ref().map_or(0, KnnGraph::k),
        generation: None,
        timings,
    })
}

/// Generates balls and clusters them.
pub fn cluster<T: Scalar>(d: &Dataset<T>, cfg: &ClusterConfig<T>) -> Result<ClusteringResult<T>> {
    if cfg.clusters == 0 {
        return Err(Error::InvalidParameter("cluster count must be at least 1".into()));
    }
    if cfg.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let t0 = Instant::now();
    let gen = generate(d, &cfg.generation)?;
    let seconds_generation = t0.elapsed().as_secs_f64();
    let qcfg = gen.quality_config(&cfg.generation.quality);
    let mut res = cluster_balls(d.n(), gen.balls, &qcfg, cfg.clusters, cfg.k, cfg.ablation)?;
    res.lambda = cfg.generation.lambda;
    res.generation = Some(gen.stats);
    res.timings.seconds_generation = seconds_generation;
    Ok(res)
}
