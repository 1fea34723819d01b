//! Ball generation: divide, adapt the granularity level, cut, refine.
//!
//! 1. Breadth-first division from the whole-dataset ball until every leaf
//!    holds at most `n^(1/3)` instances. Each division of a non-spherical ball
//!    narrows the feasible range of `gamma`.
//! 2. Abnormal leaves are divided all the way down to single instances.
//! 3. A bottom-up pass picks the cut of the tree maximizing
//!    `sum(quality - lambda)`.
//! 4. Abnormal balls in the cut are flagged once and split in two.

use std::borrow::Borrow;
use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ball::{make_ball, split_ball, GranularBall};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::quality::{
    adjustment_criterion, division_gain_interval, finalize_gamma, penalized_quality, IntervalSet, QualityConfig,
};
use crate::scalar::{cube_root_of_count, mean_std, median, Scalar};

pub type NodeId = usize;

#[derive(Clone, Debug, Serialize)]
pub struct GbTreeNode<T> {
    pub ball: GranularBall<T>,
    pub parent: Option<NodeId>,
    pub children: Option<[NodeId; 2]>,
    pub depth: usize,
}

impl<T> GbTreeNode<T> {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Binary division tree stored as an arena. Children always have larger ids
/// than their parent, so reverse id order is a valid bottom-up order.
#[derive(Clone, Debug, Serialize)]
pub struct GbTree<T> {
    nodes: Vec<GbTreeNode<T>>,
}

impl<T: Scalar> GbTree<T> {
    pub fn new(root: GranularBall<T>) -> Self {
        Self {
            nodes: vec![GbTreeNode {
                ball: root,
                parent: None,
                children: None,
                depth: 0,
            }],
        }
    }

    /// Tree rooted at the ball of the whole dataset.
    pub fn for_dataset(d: &Dataset<T>) -> Result<Self> {
        Ok(Self::new(make_ball(d, (0..d.n()).collect())?))
    }

    pub const ROOT: NodeId = 0;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &GbTreeNode<T> {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[GbTreeNode<T>] {
        &self.nodes
    }

    pub fn ball(&self, id: NodeId) -> &GranularBall<T> {
        &self.nodes[id].ball
    }

    pub fn children(&self, id: NodeId) -> Option<[NodeId; 2]> {
        self.nodes[id].children
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect()
    }

    /// Attaches two children to a leaf. Used by [`GbTree::divide`] and by
    /// callers assembling trees by hand.
    pub fn attach(&mut self, id: NodeId, left: GranularBall<T>, right: GranularBall<T>) -> [NodeId; 2] {
        assert!(self.nodes[id].is_leaf(), "node {id} already has children");
        let depth = self.nodes[id].depth + 1;
        let l = self.nodes.len();
        for ball in [left, right] {
            self.nodes.push(GbTreeNode {
                ball,
                parent: Some(id),
                children: None,
                depth,
            });
        }
        self.nodes[id].children = Some([l, l + 1]);
        [l, l + 1]
    }

    /// Splits a leaf in two. Returns `None` for singleton or coincident leaves.
    pub fn divide(&mut self, d: &Dataset<T>, id: NodeId) -> Result<Option<[NodeId; 2]>> {
        if let Some(ch) = self.nodes[id].children {
            return Ok(Some(ch));
        }
        if self.nodes[id].ball.len() < 2 {
            return Ok(None);
        }
        Ok(split_ball(d, &self.nodes[id].ball)?.map(|(l, r)| self.attach(id, l, r)))
    }

    /// Divides below `id` until every leaf is a single instance or a group
    /// of coincident instances.
    pub fn fully_divide(&mut self, d: &Dataset<T>, id: NodeId) -> Result<()> {
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            if let Some([l, r]) = self.divide(d, cur)? {
                stack.push(r);
                stack.push(l);
            }
        }
        Ok(())
    }
}

/// Rule for flagging abnormal balls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbnormalPolicy {
    /// Max radius above mean + std, or average radius above mean + std
    /// while size is below mean - std.
    #[default]
    PojgPlus,
    /// Average radius above twice its mean and size below half the mean size.
    Jia,
    /// Max radius above twice max(mean, median) of max radii.
    XieTkde,
    /// Max radius above 1.5 times max(mean, median) of max radii.
    XieIcde,
    /// `XieTkde` or `Jia`.
    Combined,
    /// Nothing is abnormal.
    None,
}

impl std::str::FromStr for AbnormalPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "pojg_plus" | "default" => Self::PojgPlus,
            "jia" => Self::Jia,
            "xie_tkde" => Self::XieTkde,
            "xie_icde" => Self::XieIcde,
            "combined" => Self::Combined,
            "none" => Self::None,
            other => return Err(Error::InvalidParameter(format!("unknown abnormal policy {other:?}"))),
        })
    }
}

// Thresholds are compared with a few ulps of slack so that identical balls,
// whose mean/std carry rounding noise, never cross them.
fn above<T: Scalar>(x: T, threshold: T) -> bool {
    x > threshold + threshold.abs() * T::epsilon() * T::lit(8.0)
}

fn below<T: Scalar>(x: T, threshold: T) -> bool {
    x < threshold - threshold.abs() * T::epsilon() * T::lit(8.0)
}

/// Flags abnormal balls; statistics are taken over the supplied list.
pub fn detect_abnormal<T: Scalar, B: Borrow<GranularBall<T>>>(
    balls: &[B],
    policy: AbnormalPolicy,
) -> Result<Vec<bool>> {
    if balls.is_empty() {
        return Err(Error::NoBalls);
    }
    let r_max: Vec<T> = balls.iter().map(|b| b.borrow().max_radius()).collect();
    let r_avg: Vec<T> = balls.iter().map(|b| b.borrow().avg_radius()).collect();
    let sizes: Vec<T> = balls.iter().map(|b| T::from_count(b.borrow().len())).collect();

    let sigma = || {
        let (m_max, s_max) = mean_std(&r_max);
        let (m_avg, s_avg) = mean_std(&r_avg);
        let (m_n, s_n) = mean_std(&sizes);
        (0..balls.len())
            .map(|i| above(r_max[i], m_max + s_max) || (above(r_avg[i], m_avg + s_avg) && below(sizes[i], m_n - s_n)))
            .collect::<Vec<_>>()
    };
    let jia = || {
        let (m_avg, _) = mean_std(&r_avg);
        let (m_n, _) = mean_std(&sizes);
        (0..balls.len())
            .map(|i| above(r_avg[i], T::lit(2.0) * m_avg) && below(sizes[i], T::lit(0.5) * m_n))
            .collect::<Vec<_>>()
    };
    let xie = |factor: f64| {
        let (m_max, _) = mean_std(&r_max);
        let threshold = T::lit(factor) * m_max.max(median(&r_max));
        r_max.iter().map(|&r| above(r, threshold)).collect::<Vec<_>>()
    };

    Ok(match policy {
        AbnormalPolicy::PojgPlus => sigma(),
        AbnormalPolicy::Jia => jia(),
        AbnormalPolicy::XieTkde => xie(2.0),
        AbnormalPolicy::XieIcde => xie(1.5),
        AbnormalPolicy::Combined => xie(2.0).into_iter().zip(jia()).map(|(a, b)| a || b).collect(),
        AbnormalPolicy::None => vec![false; balls.len()],
    })
}

/// Counters for the `gamma` adaptation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AdaptationStats {
    /// Divisions that met the adjustment criterion.
    pub candidates: usize,
    /// Constraints that narrowed the range.
    pub applied: usize,
    /// Constraints dropped because the intersection would be empty.
    pub skipped: usize,
}

#[derive(Clone, Debug)]
pub struct PreDivision<T> {
    pub tree: GbTree<T>,
    pub gamma_range: IntervalSet<T>,
    pub stats: AdaptationStats,
}

/// Breadth-first division until leaves hold at most `n^(1/3)` instances,
/// collecting `gamma` constraints along the way.
pub fn pre_divide<T: Scalar>(d: &Dataset<T>, lambda: T, cfg: &QualityConfig<T>) -> Result<PreDivision<T>> {
    let n = d.n();
    let threshold = cube_root_of_count(n);
    let mut tree = GbTree::for_dataset(d)?;
    let mut range = IntervalSet::nonnegative();
    let mut stats = AdaptationStats::default();

    let mut queue = VecDeque::from([GbTree::<T>::ROOT]);
    while let Some(id) = queue.pop_front() {
        if (tree.ball(id).len() as f64) <= threshold {
            continue;
        }
        let Some([l, r]) = tree.divide(d, id)? else {
            continue;
        };
        queue.push_back(l);
        queue.push_back(r);

        if adjustment_criterion(d, tree.ball(id), n) {
            stats.candidates += 1;
            let feasible = division_gain_interval(tree.ball(id), tree.ball(l), tree.ball(r), lambda, cfg);
            let narrowed = range.intersect(&feasible);
            if narrowed.is_empty() {
                stats.skipped += 1;
            } else {
                range = narrowed;
                stats.applied += 1;
            }
        }
    }
    Ok(PreDivision {
        tree,
        gamma_range: range,
        stats,
    })
}

/// Fully divides every abnormal leaf. Statistics are taken over the leaves
/// present before any division. Returns the number of abnormal leaves.
pub fn divide_abnormal_leaves<T: Scalar>(
    d: &Dataset<T>,
    tree: &mut GbTree<T>,
    policy: AbnormalPolicy,
) -> Result<usize> {
    let leaves = tree.leaves();
    let balls: Vec<&GranularBall<T>> = leaves.iter().map(|&id| tree.ball(id)).collect();
    let flags = detect_abnormal(&balls, policy)?;
    let abnormal: Vec<NodeId> = leaves
        .iter()
        .zip(&flags)
        .filter_map(|(&id, &f)| f.then_some(id))
        .collect();
    for &id in &abnormal {
        tree.fully_divide(d, id)?;
    }
    Ok(abnormal.len())
}

/// Antichain of tree nodes whose balls partition the root's members.
#[derive(Clone, Debug, PartialEq)]
pub struct Cut<T> {
    pub nodes: Vec<NodeId>,
    pub objective: T,
}

/// Bottom-up best cut for arbitrary per-node scores.
///
/// A node's best value is the larger of its own score and the sum of its
/// children's best values; on a tie the node itself is kept.
pub fn penalized_best_cut<T: Scalar>(tree: &GbTree<T>, scores: &[T]) -> Cut<T> {
    assert_eq!(scores.len(), tree.len());
    let mut best = scores.to_vec();
    let mut keep = vec![true; tree.len()];
    for id in (0..tree.len()).rev() {
        if let Some([l, r]) = tree.children(id) {
            let split = best[l] + best[r];
            if split > scores[id] {
                best[id] = split;
                keep[id] = false;
            }
        }
    }
    let mut nodes = Vec::new();
    let mut stack = vec![GbTree::<T>::ROOT];
    while let Some(id) = stack.pop() {
        match tree.children(id) {
            Some([l, r]) if !keep[id] => {
                stack.push(r);
                stack.push(l);
            }
            _ => nodes.push(id),
        }
    }
    Cut {
        nodes,
        objective: best[GbTree::<T>::ROOT],
    }
}

/// Best cut under penalized quality `Q - lambda`.
pub fn best_combination<T: Scalar>(tree: &GbTree<T>, cfg: &QualityConfig<T>, lambda: T) -> Cut<T> {
    let scores: Vec<T> = tree
        .nodes()
        .iter()
        .map(|node| penalized_quality(&node.ball, cfg, lambda))
        .collect();
    penalized_best_cut(tree, &scores)
}

/// Splits the abnormal balls of a list in two.
///
/// One round flags abnormal balls against the current list and splits each
/// flagged, splittable ball once. Rounds repeat up to `max_rounds` times or
/// until a round splits nothing. Under the mean + std rule some ball nearly
/// always exceeds the threshold, so an unbounded loop ends only at
/// singletons. Returns the refined list and the number of rounds that split
/// something.
pub fn refine_anomalies<T: Scalar>(
    d: &Dataset<T>,
    mut balls: Vec<GranularBall<T>>,
    policy: AbnormalPolicy,
    max_rounds: usize,
) -> Result<(Vec<GranularBall<T>>, usize)> {
    let mut rounds = 0;
    loop {
        if rounds == max_rounds {
            return Ok((balls, rounds));
        }
        let flags = detect_abnormal(&balls, policy)?;
        let mut next = Vec::with_capacity(balls.len() + 8);
        let mut changed = false;
        for (ball, abnormal) in balls.into_iter().zip(flags) {
            if abnormal && ball.len() > 1 {
                if let Some((l, r)) = split_ball(d, &ball)? {
                    next.push(l);
                    next.push(r);
                    changed = true;
                    continue;
                }
            }
            next.push(ball);
        }
        balls = next;
        if !changed {
            return Ok((balls, rounds));
        }
        rounds += 1;
    }
}

/// Whether the balls' member sets partition `0..n`.
pub fn is_partition<T: Scalar, B: Borrow<GranularBall<T>>>(balls: &[B], n: usize) -> bool {
    let mut seen = vec![false; n];
    for b in balls {
        for &i in b.borrow().members() {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
    }
    seen.into_iter().all(|s| s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig<T> {
    pub lambda: T,
    pub policy: AbnormalPolicy,
    /// Step added to the infimum of the feasible `gamma` range.
    pub epsilon: T,
    /// Specificity form and adaptation radius; its `gamma` is ignored unless
    /// `fixed_gamma` is set.
    pub quality: QualityConfig<T>,
    /// Skips adaptation and uses this level instead.
    pub fixed_gamma: Option<T>,
    /// Detect-and-split rounds after the cut; `usize::MAX` repeats until stable.
    pub refine_rounds: usize,
}

impl<T: Scalar> GenerationConfig<T> {
    pub fn new(lambda: T) -> Self {
        Self {
            lambda,
            policy: AbnormalPolicy::PojgPlus,
            epsilon: T::lit(1e-6),
            quality: QualityConfig::default(),
            fixed_gamma: None,
            refine_rounds: 1,
        }
    }

    pub fn with_policy(mut self, policy: AbnormalPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GenerationStats {
    pub pre_division_leaves: usize,
    pub abnormal_leaves: usize,
    pub leaves_after_full_division: usize,
    pub tree_nodes: usize,
    pub cut_size: usize,
    pub refine_rounds: usize,
    pub final_balls: usize,
    pub adaptation: AdaptationStats,
    pub gamma_in_range: bool,
    pub seconds_pre_divide: f64,
    pub seconds_abnormal_leaves: f64,
    pub seconds_best_cut: f64,
    pub seconds_refine: f64,
}

#[derive(Clone, Debug)]
pub struct GenerationResult<T> {
    pub balls: Vec<GranularBall<T>>,
    pub gamma: T,
    pub gamma_range: IntervalSet<T>,
    /// Tree after abnormal-leaf division; refinement splits are not recorded in it.
    pub tree: GbTree<T>,
    pub cut: Cut<T>,
    pub stats: GenerationStats,
}

impl<T: Scalar> GenerationResult<T> {
    pub fn quality_config(&self, template: &QualityConfig<T>) -> QualityConfig<T> {
        QualityConfig {
            gamma: self.gamma,
            ..*template
        }
    }
}

/// Runs the whole generation pipeline.
pub fn generate<T: Scalar>(d: &Dataset<T>, cfg: &GenerationConfig<T>) -> Result<GenerationResult<T>> {
    if !cfg.lambda.is_finite() || cfg.lambda < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be >= 0, got {}",
            cfg.lambda
        )));
    }
    if cfg.epsilon.is_nan() || cfg.epsilon <= T::zero() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be > 0, got {}",
            cfg.epsilon
        )));
    }
    let mut stats = GenerationStats::default();

    let t0 = Instant::now();
    let PreDivision {
        mut tree,
        gamma_range,
        stats: adaptation,
    } = pre_divide(d, cfg.lambda, &cfg.quality)?;
    stats.adaptation = adaptation;
    stats.pre_division_leaves = tree.leaves().len();
    let (gamma, in_range) = match cfg.fixed_gamma {
        Some(g) => (g, true),
        None => {
            let fg = finalize_gamma(&gamma_range, cfg.epsilon);
            (fg.gamma, fg.in_range)
        }
    };
    stats.gamma_in_range = in_range;
    stats.seconds_pre_divide = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    stats.abnormal_leaves = divide_abnormal_leaves(d, &mut tree, cfg.policy)?;
    stats.leaves_after_full_division = tree.leaves().len();
    stats.tree_nodes = tree.len();
    stats.seconds_abnormal_leaves = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let qcfg = QualityConfig { gamma, ..cfg.quality };
    let cut = best_combination(&tree, &qcfg, cfg.lambda);
    stats.cut_size = cut.nodes.len();
    stats.seconds_best_cut = t2.elapsed().as_secs_f64();

    let t3 = Instant::now();
    let chosen: Vec<GranularBall<T>> = cut.nodes.iter().map(|&id| tree.ball(id).clone()).collect();
    let (balls, rounds) = refine_anomalies(d, chosen, cfg.policy, cfg.refine_rounds)?;
    stats.refine_rounds = rounds;
    stats.final_balls = balls.len();
    stats.seconds_refine = t3.elapsed().as_secs_f64();

    debug_assert!(is_partition(&balls, d.n()));
    Ok(GenerationResult {
        balls,
        gamma,
        gamma_range,
        tree,
        cut,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Dataset<f64> {
        Dataset::from_rows(xs.iter().map(|&x| vec![x]).collect(), None).unwrap()
    }

    fn ball_with(d: &Dataset<f64>, members: Vec<usize>) -> GranularBall<f64> {
        make_ball(d, members).unwrap()
    }

    #[test]
    fn pre_divide_threshold_for_eight_points() {
        let d = line(&[0.0, 1.0, 2.5, 4.0, 7.0, 7.5, 11.0, 15.0]);
        let pd = pre_divide(&d, 0.0, &QualityConfig::default()).unwrap();
        for id in pd.tree.leaves() {
            assert!(pd.tree.ball(id).len() <= 2);
        }
        assert!(is_partition(
            &pd.tree.leaves().iter().map(|&i| pd.tree.ball(i)).collect::<Vec<_>>(),
            8
        ));
    }

    #[test]
    fn pre_divide_leaves_coincident_root_alone() {
        let d = line(&[3.0, 3.0, 3.0, 3.0]);
        let pd = pre_divide(&d, 0.0, &QualityConfig::default()).unwrap();
        assert_eq!(pd.tree.len(), 1);
        assert_eq!(pd.gamma_range, IntervalSet::nonnegative());
    }

    #[test]
    fn first_split_separates_blobs() {
        let mut xs = Vec::new();
        for i in 0..50 {
            xs.push(-0.1 + 0.2 * i as f64 / 49.0);
        }
        for i in 0..50 {
            xs.push(10.0 - 0.1 + 0.2 * i as f64 / 49.0);
        }
        let d = line(&xs);
        let pd = pre_divide(&d, 0.0, &QualityConfig::default()).unwrap();
        let [l, r] = pd.tree.children(GbTree::<f64>::ROOT).unwrap();
        let mut sides = [pd.tree.ball(l).members().to_vec(), pd.tree.ball(r).members().to_vec()];
        sides.sort();
        assert_eq!(sides[0], (0..50).collect::<Vec<_>>());
        assert_eq!(sides[1], (50..100).collect::<Vec<_>>());
    }

    #[test]
    fn abnormal_sigma_rule_on_max_radius() {
        let d = line(&[0.0, 1.0, 2.0, 10.0, 12.0, 20.0, 28.0]);
        let a = ball_with(&d, vec![0, 1]); // max radius 0.5
        let b = ball_with(&d, vec![1, 2]); // 0.5
        let c = ball_with(&d, vec![3, 4]); // 1.0
        let e = ball_with(&d, vec![5, 6]); // 4.0
                                           // max radii [0.5, 0.5, 1, 4]: mean 1.5, std ~1.458 -> threshold ~2.958
        let flags = detect_abnormal(&[a, b, c, e], AbnormalPolicy::PojgPlus).unwrap();
        assert_eq!(flags, vec![false, false, false, true]);
    }

    #[test]
    fn abnormal_example_one_one_four() {
        // R_max [1,1,4]: mean 2, pop-std sqrt(2) -> threshold 3.414; only the third.
        let d = line(&[0.0, 2.0, 10.0, 12.0, 20.0, 28.0]);
        let balls = [
            ball_with(&d, vec![0, 1]),
            ball_with(&d, vec![2, 3]),
            ball_with(&d, vec![4, 5]),
        ];
        let rmax: Vec<f64> = balls.iter().map(|b| b.max_radius()).collect();
        assert_eq!(rmax, vec![1.0, 1.0, 4.0]);
        let flags = detect_abnormal(&balls, AbnormalPolicy::PojgPlus).unwrap();
        assert_eq!(flags, vec![false, false, true]);
    }

    #[test]
    fn abnormal_degenerate_lists() {
        let d = line(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let one = [ball_with(&d, vec![0, 1, 2])];
        assert_eq!(detect_abnormal(&one, AbnormalPolicy::PojgPlus).unwrap(), vec![false]);
        let same: Vec<GranularBall<f64>> = (0..5).map(|_| ball_with(&d, vec![3, 4, 5])).collect();
        for policy in [
            AbnormalPolicy::PojgPlus,
            AbnormalPolicy::Jia,
            AbnormalPolicy::XieTkde,
            AbnormalPolicy::XieIcde,
            AbnormalPolicy::Combined,
        ] {
            assert!(detect_abnormal(&same, policy).unwrap().iter().all(|f| !f));
        }
        let empty: [GranularBall<f64>; 0] = [];
        assert!(matches!(
            detect_abnormal(&empty, AbnormalPolicy::PojgPlus),
            Err(Error::NoBalls)
        ));
    }

    #[test]
    fn table_policies() {
        // R_max values 1,1,1,1,3.5: mean 1.5, median 1 -> xie_tkde threshold 3, xie_icde 2.25
        let d = line(&[0.0, 2.0, 10.0, 12.0, 20.0, 22.0, 30.0, 32.0, 40.0, 47.0]);
        let balls: Vec<_> = (0..5).map(|k| ball_with(&d, vec![2 * k, 2 * k + 1])).collect();
        assert_eq!(balls[4].max_radius(), 3.5);
        assert_eq!(
            detect_abnormal(&balls, AbnormalPolicy::XieTkde).unwrap(),
            vec![false, false, false, false, true]
        );
        assert_eq!(
            detect_abnormal(&balls, AbnormalPolicy::XieIcde).unwrap(),
            vec![false, false, false, false, true]
        );
        // Jia needs a small ball too: all sizes equal, so nothing.
        assert!(detect_abnormal(&balls, AbnormalPolicy::Jia).unwrap().iter().all(|f| !f));
        assert_eq!(
            detect_abnormal(&balls, AbnormalPolicy::Combined).unwrap(),
            vec![false, false, false, false, true]
        );
        assert!(detect_abnormal(&balls, AbnormalPolicy::None)
            .unwrap()
            .iter()
            .all(|f| !f));
    }

    #[test]
    fn jia_rule_needs_wide_and_small() {
        let mut xs: Vec<f64> = Vec::new();
        for k in 0..4 {
            for j in 0..6 {
                xs.push(k as f64 * 100.0 + j as f64 * 0.1);
            }
        }
        xs.push(500.0);
        xs.push(520.0);
        let d = line(&xs);
        let mut balls: Vec<_> = (0..4).map(|k| ball_with(&d, (6 * k..6 * k + 6).collect())).collect();
        balls.push(ball_with(&d, vec![24, 25]));
        let flags = detect_abnormal(&balls, AbnormalPolicy::Jia).unwrap();
        assert_eq!(flags, vec![false, false, false, false, true]);
    }

    #[test]
    fn full_division_examples() {
        let d = line(&[0.0, 1.0, 3.0, 7.0]);
        let mut tree = GbTree::for_dataset(&d).unwrap();
        tree.fully_divide(&d, GbTree::<f64>::ROOT).unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 4);
        assert!(leaves.iter().all(|&l| tree.ball(l).is_singleton()));

        let mut single = GbTree::new(make_ball(&d, vec![2]).unwrap());
        single.fully_divide(&d, GbTree::<f64>::ROOT).unwrap();
        assert_eq!(single.len(), 1);

        // Three coincident points plus one: {coincident triple, singleton}.
        let d = line(&[1.0, 1.0, 1.0, 4.0]);
        let mut tree = GbTree::for_dataset(&d).unwrap();
        tree.fully_divide(&d, GbTree::<f64>::ROOT).unwrap();
        let mut groups: Vec<Vec<usize>> = tree.leaves().iter().map(|&l| tree.ball(l).members().to_vec()).collect();
        groups.sort();
        assert_eq!(groups, vec![vec![0, 1, 2], vec![3]]);
    }

    /// Root with two leaf children and hand-set scores.
    fn two_level() -> GbTree<f64> {
        let d = line(&[0.0, 1.0, 5.0, 6.0]);
        let mut tree = GbTree::for_dataset(&d).unwrap();
        tree.divide(&d, GbTree::<f64>::ROOT).unwrap().unwrap();
        tree
    }

    #[test]
    fn dp_children_win() {
        // Q: root 2.0, children 1.5 and 1.2, lambda 0.3 -> PQ 1.7 vs 1.2 + 0.9
        let tree = two_level();
        let cut = penalized_best_cut(&tree, &[1.7, 1.2, 0.9]);
        assert_eq!(cut.nodes, vec![1, 2]);
        assert!((cut.objective - 2.1).abs() < 1e-15);
    }

    #[test]
    fn dp_parent_wins_with_larger_penalty() {
        // lambda 1.0: root 1.0 vs 0.5 + 0.2
        let tree = two_level();
        let cut = penalized_best_cut(&tree, &[1.0, 0.5, 0.2]);
        assert_eq!(cut.nodes, vec![0]);
        assert_eq!(cut.objective, 1.0);
    }

    #[test]
    fn dp_tie_keeps_parent() {
        let tree = two_level();
        let cut = penalized_best_cut(&tree, &[1.0, 0.5, 0.5]);
        assert_eq!(cut.nodes, vec![0]);
    }

    #[test]
    fn zero_penalty_is_unpenalized_best_quality() {
        let d = line(&[0.0, 0.5, 1.0, 5.0, 5.2, 9.0, 9.1, 9.3]);
        let mut tree = GbTree::for_dataset(&d).unwrap();
        tree.fully_divide(&d, GbTree::<f64>::ROOT).unwrap();
        let cfg = QualityConfig::with_gamma(1.0);
        let a = best_combination(&tree, &cfg, 0.0);
        let q: Vec<f64> = tree
            .nodes()
            .iter()
            .map(|n| crate::quality::quality(&n.ball, &cfg))
            .collect();
        let b = penalized_best_cut(&tree, &q);
        assert_eq!(a, b);
    }

    #[test]
    fn refine_is_fixed_point_without_anomalies() {
        let d = line(&[0.0, 1.0, 10.0, 11.0, 20.0, 21.0]);
        let balls: Vec<_> = (0..3).map(|k| ball_with(&d, vec![2 * k, 2 * k + 1])).collect();
        let (out, rounds) = refine_anomalies(&d, balls.clone(), AbnormalPolicy::PojgPlus, usize::MAX).unwrap();
        assert_eq!(out, balls);
        assert_eq!(rounds, 0);
    }

    #[test]
    fn refine_splits_the_wide_ball() {
        let mut xs = Vec::new();
        for k in 0..10 {
            xs.push(k as f64 * 10.0);
            xs.push(k as f64 * 10.0 + 0.1);
        }
        xs.extend([200.0, 203.0, 206.0]);
        let d = line(&xs);
        let mut balls: Vec<_> = (0..10).map(|k| ball_with(&d, vec![2 * k, 2 * k + 1])).collect();
        balls.push(ball_with(&d, vec![20, 21, 22]));
        let flags = detect_abnormal(&balls, AbnormalPolicy::PojgPlus).unwrap();
        assert_eq!(flags.iter().filter(|&&f| f).count(), 1);
        assert!(flags[10]);
        let (out, rounds) = refine_anomalies(&d, balls, AbnormalPolicy::PojgPlus, usize::MAX).unwrap();
        assert!(rounds >= 1);
        assert!(out.len() > 11);
        assert!(is_partition(&out, d.n()));
    }

    #[test]
    fn refine_skips_unsplittable() {
        let d = line(&[0.0, 0.1, 50.0, 50.0, 50.0]);
        // Abnormal by size/radius rules it may be, but coincident points cannot split.
        let balls = vec![
            ball_with(&d, vec![0]),
            ball_with(&d, vec![1]),
            ball_with(&d, vec![2, 3, 4]),
        ];
        let (out, _) = refine_anomalies(&d, balls.clone(), AbnormalPolicy::XieIcde, usize::MAX).unwrap();
        assert_eq!(out, balls);
    }

    #[test]
    fn generate_partitions_and_collapses_under_huge_penalty() {
        let xs: Vec<f64> = (0..60)
            .map(|i| (i as f64 * 0.37).sin() * 5.0 + i as f64 * 0.1)
            .collect();
        let d = line(&xs).standardize();
        let res = generate(&d, &GenerationConfig::new(1.0e6)).unwrap();
        assert!(is_partition(&res.balls, d.n()));
        assert_eq!(res.cut.nodes, vec![GbTree::<f64>::ROOT]);
        assert_eq!(res.balls.len(), 1);
    }

    #[test]
    fn generate_rejects_bad_parameters() {
        let d = line(&[0.0, 1.0]);
        assert!(generate(&d, &GenerationConfig::new(-1.0)).is_err());
        assert!(generate(&d, &GenerationConfig::new(0.0).with_epsilon(0.0)).is_err());
    }

    #[test]
    fn no_policy_at_zero_penalty_is_plain_best_cut() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 7919) % 113) as f64 / 10.0).collect();
        let d = line(&xs).standardize();
        let cfg = GenerationConfig::new(0.0).with_policy(AbnormalPolicy::None);
        let res = generate(&d, &cfg).unwrap();
        let pd = pre_divide(&d, 0.0, &QualityConfig::default()).unwrap();
        let cut = best_combination(&pd.tree, &QualityConfig::with_gamma(res.gamma), 0.0);
        let expected: Vec<&GranularBall<f64>> = cut.nodes.iter().map(|&i| pd.tree.ball(i)).collect();
        assert_eq!(res.balls.iter().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("pojg-plus".parse::<AbnormalPolicy>().unwrap(), AbnormalPolicy::PojgPlus);
        assert_eq!("xie_icde".parse::<AbnormalPolicy>().unwrap(), AbnormalPolicy::XieIcde);
        assert!("bogus".parse::<AbnormalPolicy>().is_err());
    }
}
