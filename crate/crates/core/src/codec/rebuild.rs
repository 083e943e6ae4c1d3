//! Decoder-side label reconstruction.
//!
//! Labels are not transmitted per pixel. Both sides walk the valid pixels
//! in row-major order and guess each label from a proxy point: the pixel's
//! ray scaled by the already reconstructed range of its left neighbour (or
//! the pixel above, or the last reconstructed pixel). The guess is the
//! ground label if the proxy lies within the ground threshold of the
//! transmitted ground plane, otherwise the nearest transmitted center. The
//! encoder lists every pixel where that guess is wrong.

use crate::error::{Error, Result};
use crate::geometry::{Point3, RayTable};
use crate::modeling::ClusterPredictor;
use crate::plane::PlaneModel;
use crate::segmentation::{nearest_center, GROUND_LABEL, UNLABELED};

/// Proxy range used before any pixel has been reconstructed.
const INITIAL_PROXY_RANGE: f64 = 10.0;

pub struct Rebuild<'a> {
    pub rays: &'a RayTable,
    pub valid: &'a [bool],
    pub predictors: &'a [ClusterPredictor],
    pub accuracies: &'a [f64],
    pub centers: &'a [Point3],
    pub ground: Option<PlaneModel>,
    pub ground_threshold: f64,
}

impl Rebuild<'_> {
    fn guess(&self, proxy: Point3) -> u32 {
        if let Some(g) = &self.ground {
            if g.distance(proxy) <= self.ground_threshold {
                return GROUND_LABEL;
            }
        }
        if self.centers.is_empty() {
            GROUND_LABEL
        } else {
            nearest_center(proxy, self.centers) as u32 + 1
        }
    }

    /// Walk the valid pixels, asking `resolve(ordinal, guess)` for the
    /// actual label of each one. Returns the per-pixel labels and
    /// reconstructed ranges (NaN on invalid pixels).
    pub fn run(
        &self,
        codes: &[i64],
        mut resolve: impl FnMut(usize, u32) -> Result<u32>,
    ) -> Result<(Vec<u32>, Vec<f64>)> {
        let w = self.rays.width();
        let n = self.valid.len();
        let mut labels = vec![UNLABELED; n];
        let mut recon = vec![f64::NAN; n];
        let mut last = INITIAL_PROXY_RANGE;
        let mut ordinal = 0usize;
        for i in 0..n {
            if !self.valid[i] {
                continue;
            }
            let col = i % w;
            let proxy_range = if col > 0 && self.valid[i - 1] {
                recon[i - 1]
            } else if i >= w && self.valid[i - w] {
                recon[i - w]
            } else {
                last
            };
            let dir = self.rays.dir_at(i);
            let guess = self.guess(dir * proxy_range);
            let label = resolve(ordinal, guess)?;
            let pred = self
                .predictors
                .get(label as usize)
                .ok_or_else(|| Error::CorruptFrame(format!("label {label} has no model")))?;
            let code =
                *codes.get(ordinal).ok_or_else(|| Error::CorruptFrame("residual stream too short".into()))?;
            let (r_hat, _) = pred.predict(dir);
            let r = r_hat + code as f64 * self.accuracies[label as usize];
            if !r.is_finite() {
                return Err(Error::CorruptFrame(format!(
                    "cluster {label} needs a fallback range that was not sent"
                )));
            }
            let r = r.max(0.0);
            recon[i] = r;
            last = r;
            labels[i] = label;
            ordinal += 1;
        }
        if ordinal != codes.len() {
            return Err(Error::CorruptFrame("residual stream too long".into()));
        }
        Ok((labels, recon))
    }

    /// Encoder side: ordinals and true labels where the guess misses.
    pub fn exceptions(&self, codes: &[i64], truth: &[u32]) -> Result<Vec<(u32, u32)>> {
        let truth_valid: Vec<u32> = truth.iter().copied().filter(|l| *l != UNLABELED).collect();
        let mut out = Vec::new();
        self.run(codes, |ord, guess| {
            let t = truth_valid[ord];
            if t != guess {
                out.push((ord as u32, t));
            }
            Ok(t)
        })?;
        Ok(out)
    }

    /// Decoder side: apply the exception list to the guesses.
    pub fn decode(&self, codes: &[i64], exceptions: &[(u32, u32)]) -> Result<(Vec<u32>, Vec<f64>)> {
        let mut next = exceptions.iter().peekable();
        self.run(codes, |ord, guess| match next.peek() {
            Some(&&(o, l)) if o as usize == ord => {
                next.next();
                Ok(l)
            }
            _ => Ok(guess),
        })
    }
}
