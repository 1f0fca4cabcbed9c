//! Optimal one-to-one assignment (Hungarian method with potentials).

use crate::types::{iou, BBox, Detection, ObjectClass};

/// Minimum-cost perfect matching on a square matrix; returns the column
/// assigned to each row. Costs must be finite.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));
    // 1-based potentials; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    row_to_col
}

/// Maximum-weight assignment on a rectangular matrix of non-negative weights.
/// Returns `(row, col)` pairs; rows or columns left over by the shape are absent.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let n = rows.max(cols);
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i < rows && j < cols { -weights[i][j] } else { 0.0 }).collect())
        .collect();
    min_cost_assignment(&cost)
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| i < rows && j < cols)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Association {
    /// `(track index, detection index)`
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// IoU weights between predicted track boxes and detections; zero across classes.
pub fn iou_matrix(predicted: &[(BBox, ObjectClass)], detections: &[Detection]) -> Vec<Vec<f64>> {
    predicted
        .iter()
        .map(|(bbox, class)| {
            detections
                .iter()
                .map(|d| if d.class == *class { iou(bbox, &d.bbox) } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Total-IoU-maximizing assignment; matched pairs under `iou_min` are split
/// back into unmatched tracks and detections.
pub fn associate(predicted: &[(BBox, ObjectClass)], detections: &[Detection], iou_min: f64) -> Association {
    let weights = iou_matrix(predicted, detections);
    let mut track_used = vec![false; predicted.len()];
    let mut det_used = vec![false; detections.len()];
    let mut matches = Vec::new();
    for (ti, di) in max_weight_assignment(&weights) {
        if weights[ti][di] >= iou_min {
            track_used[ti] = true;
            det_used[di] = true;
            matches.push((ti, di));
        }
    }
    Association {
        matches,
        unmatched_tracks: (0..predicted.len()).filter(|&i| !track_used[i]).collect(),
        unmatched_detections: (0..detections.len()).filter(|&i| !det_used[i]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(class: ObjectClass, b: BBox) -> Detection {
        Detection { t: 0.0, frame_id: 0, class, confidence: 1.0, bbox: b }
    }

    #[test]
    fn singleton_match() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0);
        let a = associate(&[(b, ObjectClass::Vehicle)], &[det(ObjectClass::Vehicle, BBox::new(1.0, 0.0, 11.0, 10.0))], 0.3);
        assert_eq!(a.matches, vec![(0, 0)]);
        assert!(a.unmatched_tracks.is_empty() && a.unmatched_detections.is_empty());
    }

    #[test]
    fn class_gate() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0);
        let a = associate(&[(b, ObjectClass::Vehicle)], &[det(ObjectClass::Pedestrian, b)], 0.3);
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_tracks, vec![0]);
        assert_eq!(a.unmatched_detections, vec![0]);
    }

    #[test]
    fn beats_greedy_first_row() {
        // Greedy on row 0 takes column 0 (0.6) and leaves row 1 with 0.1;
        // the optimum swaps for 0.5 + 0.55.
        let w = vec![vec![0.6, 0.5], vec![0.55, 0.1]];
        let mut m = max_weight_assignment(&w);
        m.sort();
        assert_eq!(m, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn low_iou_pairs_are_demoted() {
        let t = BBox::new(0.0, 0.0, 10.0, 10.0);
        let d = det(ObjectClass::Vehicle, BBox::new(8.0, 0.0, 18.0, 10.0));
        let a = associate(&[(t, ObjectClass::Vehicle)], &[d], 0.3);
        assert!(a.matches.is_empty());
    }

    #[test]
    fn rectangular_shapes() {
        let w = vec![vec![0.2, 0.9, 0.1]];
        assert_eq!(max_weight_assignment(&w), vec![(0, 1)]);
        let tall = vec![vec![0.2], vec![0.9], vec![0.1]];
        assert_eq!(max_weight_assignment(&tall), vec![(1, 0)]);
        assert!(max_weight_assignment(&[]).is_empty());
    }
}
