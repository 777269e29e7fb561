use super::{disparity_from_corr, DecodeResult};
use crate::error::{domain, Result};
use crate::grid::{DisparityMap, Grid, Mask};
use crate::par;

/// Output of [`list_decode_order_prior`].
#[derive(Clone, Debug, PartialEq)]
pub struct OrderPriorResult {
    pub corr: Grid<Option<usize>>,
    pub disparity: DisparityMap,
    /// Pixels that violate the anchor order and have no candidate that fits it.
    pub flagged: Mask,
    /// Number of pixels whose correspondence was replaced.
    pub changed: usize,
}

/// Enforces non-decreasing projector columns along each row.
///
/// Pixels with confidence above `t_high` are anchors and are never modified.
/// Every other decoded pixel must satisfy `left ≤ corr ≤ right`, where `left`
/// and `right` are the correspondences of the nearest anchors on either side
/// (a missing side imposes no bound). A pixel whose best candidate breaks the
/// order takes the nearest-distance candidate that respects it, or is kept
/// and flagged when none does.
pub fn list_decode_order_prior(result: &DecodeResult, t_high: f32) -> Result<OrderPriorResult> {
    if result.top_l() < 2 {
        return domain("order prior needs at least two candidates per pixel");
    }
    let (rows, cols) = (result.rows(), result.cols());
    let row_outs = par::map_range(rows, |r| {
        let is_anchor =
            |c: usize| result.corr.get(r, c).is_some() && *result.confidence.get(r, c) > t_high;
        // nearest anchor correspondence to the left of each pixel
        let mut left = vec![None; cols];
        let mut last = None;
        for (c, slot) in left.iter_mut().enumerate() {
            *slot = last;
            if is_anchor(c) {
                last = *result.corr.get(r, c);
            }
        }
        let mut right = vec![None; cols];
        let mut last = None;
        for c in (0..cols).rev() {
            right[c] = last;
            if is_anchor(c) {
                last = *result.corr.get(r, c);
            }
        }
        let fits = |c: usize, col: usize| left[c].is_none_or(|lo| lo <= col) && right[c].is_none_or(|hi| col <= hi);

        let mut corr: Vec<Option<usize>> = result.corr.row(r).to_vec();
        let mut flagged = vec![false; cols];
        let mut changed = 0;
        for c in 0..cols {
            let Some(best) = corr[c] else { continue };
            if is_anchor(c) || fits(c, best) {
                continue;
            }
            match result.candidates(r, c).iter().find(|cand| fits(c, cand.column)) {
                Some(cand) => {
                    corr[c] = Some(cand.column);
                    changed += 1;
                }
                None => flagged[c] = true,
            }
        }
        (corr, flagged, changed)
    });
    let mut corr = Vec::with_capacity(rows * cols);
    let mut flagged = Vec::with_capacity(rows * cols);
    let mut changed = 0;
    for (c, f, n) in row_outs {
        corr.extend(c);
        flagged.extend(f);
        changed += n;
    }
    let corr = Grid::from_vec(rows, cols, corr);
    Ok(OrderPriorResult {
        disparity: disparity_from_corr(&corr),
        corr,
        flagged: Grid::from_vec(rows, cols, flagged),
        changed,
    })
}

/// Replaces low-confidence disparities by the lower median of confident neighbors.
///
/// A pixel with confidence below `t_low` takes the lower median of the
/// disparities of pixels in its `window × window` neighborhood whose
/// confidence exceeds `t_high`; with no such neighbor it is left unchanged.
/// Pixels at or above `t_low` are never modified.
pub fn confidence_median_filter(
    disparity: &DisparityMap,
    confidence: &Grid<f32>,
    t_low: f32,
    t_high: f32,
    window: usize,
) -> Result<DisparityMap> {
    if !(0.0 <= t_low && t_low <= t_high && t_high <= 1.0) {
        return domain("thresholds must satisfy 0 ≤ t_low ≤ t_high ≤ 1");
    }
    if window == 0 || window.is_multiple_of(2) {
        return domain("median window must be odd");
    }
    if !disparity.same_shape(confidence) {
        return domain("disparity and confidence differ in shape");
    }
    let (rows, cols) = (disparity.rows(), disparity.cols());
    let half = window / 2;
    let row_outs = par::map_range(rows, |r| {
        let mut out = disparity.row(r).to_vec();
        let mut pool = Vec::with_capacity(window * window);
        for (c, slot) in out.iter_mut().enumerate() {
            if *confidence.get(r, c) >= t_low {
                continue;
            }
            pool.clear();
            for rr in r.saturating_sub(half)..(r + half + 1).min(rows) {
                for cc in c.saturating_sub(half)..(c + half + 1).min(cols) {
                    if *confidence.get(rr, cc) > t_high {
                        if let Some(d) = *disparity.get(rr, cc) {
                            pool.push(d);
                        }
                    }
                }
            }
            if !pool.is_empty() {
                pool.sort_unstable();
                *slot = Some(pool[(pool.len() - 1) / 2]);
            }
        }
        out
    });
    Ok(Grid::from_vec(rows, cols, row_outs.concat()))
}

#[cfg(test)]
mod tests {
    use super::super::Candidate;
    use super::*;

    /// One-row result with the given best columns, confidences and candidate lists.
    fn row_result(best: &[usize], conf: &[f32], cands: &[&[usize]]) -> DecodeResult {
        let cols = best.len();
        let corr = Grid::from_fn(1, cols, |_, c| Some(best[c]));
        let mut candidates = Vec::new();
        for (c, list) in cands.iter().enumerate() {
            assert_eq!(list[0], best[c]);
            candidates.extend(list.iter().enumerate().map(|(i, &column)| Candidate {
                column,
                distance: i as f32,
            }));
        }
        DecodeResult {
            disparity: disparity_from_corr(&corr),
            corr,
            confidence: Grid::from_fn(1, cols, |_, c| conf[c]),
            d1: Grid::filled(1, cols, 0.0),
            d2: Grid::filled(1, cols, 1.0),
            top_l: 3,
            candidates,
        }
    }

    #[test]
    fn outlier_replaced_by_fitting_candidate() {
        let res = row_result(
            &[10, 11, 500, 13, 14],
            &[1.0, 1.0, 0.05, 1.0, 1.0],
            &[&[10, 1, 2], &[11, 1, 2], &[500, 12, 700], &[13, 1, 2], &[14, 1, 2]],
        );
        let fixed = list_decode_order_prior(&res, 0.5).unwrap();
        assert_eq!(*fixed.corr.get(0, 2), Some(12));
        assert_eq!(*fixed.disparity.get(0, 2), Some(2 - 12));
        assert_eq!(fixed.changed, 1);
        assert!(!fixed.flagged.iter().any(|&f| f));
    }

    #[test]
    fn confident_rows_untouched() {
        let res = row_result(&[10, 900, 3], &[0.9, 0.8, 1.0], &[&[10, 0, 1], &[900, 0, 1], &[3, 0, 1]]);
        let out = list_decode_order_prior(&res, 0.5).unwrap();
        assert_eq!(out.corr, res.corr);
        assert_eq!(out.changed, 0);
    }

    #[test]
    fn unfixable_pixel_flagged() {
        let res = row_result(&[10, 700, 11], &[1.0, 0.1, 1.0], &[&[10, 0, 1], &[700, 600, 3], &[11, 0, 1]]);
        let out = list_decode_order_prior(&res, 0.5).unwrap();
        assert_eq!(*out.corr.get(0, 1), Some(700));
        assert!(*out.flagged.get(0, 1));
    }

    #[test]
    fn one_sided_bound_at_row_edge() {
        let res = row_result(&[900, 20, 21], &[0.1, 1.0, 1.0], &[&[900, 5, 30], &[20, 0, 1], &[21, 0, 1]]);
        let out = list_decode_order_prior(&res, 0.5).unwrap();
        assert_eq!(*out.corr.get(0, 0), Some(5));
    }

    fn maps(d: &[&[i32]], conf: &[&[f32]]) -> (DisparityMap, Grid<f32>) {
        let rows = d.len();
        let cols = d[0].len();
        (
            Grid::from_fn(rows, cols, |r, c| Some(d[r][c])),
            Grid::from_fn(rows, cols, |r, c| conf[r][c]),
        )
    }

    #[test]
    fn outlier_takes_constant_neighbourhood() {
        let (d, conf) = maps(
            &[&[4, 4, 4], &[4, 99, 4], &[4, 4, 4]],
            &[&[1.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 1.0]],
        );
        let out = confidence_median_filter(&d, &conf, 0.1, 0.5, 5).unwrap();
        assert_eq!(*out.get(1, 1), Some(4));
        assert_eq!(*out.get(0, 0), Some(4));
    }

    #[test]
    fn even_pool_uses_lower_median() {
        let (d, conf) = maps(&[&[1, 7, 3, 9]], &[&[0.9, 0.0, 0.9, 0.9]]);
        // pool for column 1 is {1, 3, 9}; for a 3-window it is {1, 3}
        let out = confidence_median_filter(&d, &conf, 0.1, 0.5, 3).unwrap();
        assert_eq!(*out.get(0, 1), Some(1));
        let out = confidence_median_filter(&d, &conf, 0.1, 0.5, 5).unwrap();
        assert_eq!(*out.get(0, 1), Some(3));
    }

    #[test]
    fn filter_parameters_checked() {
        let (d, conf) = maps(&[&[1]], &[&[1.0]]);
        assert!(confidence_median_filter(&d, &conf, 0.6, 0.5, 5).is_err());
        assert!(confidence_median_filter(&d, &conf, 0.1, 0.5, 4).is_err());
        assert_eq!(confidence_median_filter(&d, &conf, 0.1, 0.5, 1).unwrap(), d);
    }
}
