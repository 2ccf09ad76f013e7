//! Dense N x N stores for direct-experience images and gossip reputations.

use crate::scalar::Scalar;

/// Row-major square matrix; entry `(i, j)` is agent `i`'s view of agent `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> SquareMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, value: S) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    /// True when every entry lies in `[-1, 1]`.
    pub fn within_unit_bounds(&self) -> bool {
        self.data.iter().all(|v| *v >= -S::one() && *v <= S::one())
    }
}

/// Direct-experience images, `I[i][j]`. Entries stay in `[-1, 1]`; the
/// diagonal is never written.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMatrix<S>(SquareMatrix<S>);

/// Gossip-derived reputations, `R[i][j]`, kept apart from images.
#[derive(Debug, Clone, PartialEq)]
pub struct ReputationMatrix<S>(SquareMatrix<S>);

macro_rules! unit_matrix {
    ($name:ident) => {
        impl<S: Scalar> $name<S> {
            pub fn zeros(n: usize) -> Self {
                Self(SquareMatrix::zeros(n))
            }

            pub fn n(&self) -> usize {
                self.0.n()
            }

            #[inline]
            pub fn get(&self, i: usize, j: usize) -> S {
                self.0.get(i, j)
            }

            /// Stores `value` clamped to `[-1, 1]`. Off-diagonal only.
            pub fn set(&mut self, i: usize, j: usize, value: S) {
                assert_ne!(i, j, "self-evaluations are not stored");
                self.0.set(i, j, value.clamp_unit());
            }

            pub fn row(&self, i: usize) -> &[S] {
                self.0.row(i)
            }

            pub fn as_matrix(&self) -> &SquareMatrix<S> {
                &self.0
            }

            pub fn within_unit_bounds(&self) -> bool {
                self.0.within_unit_bounds()
            }

            pub fn is_all_zero(&self) -> bool {
                self.0.entries().iter().all(|v| v.is_zero())
            }
        }
    };
}

unit_matrix!(ImageMatrix);
unit_matrix!(ReputationMatrix);

impl<S: Scalar> ImageMatrix<S> {
    /// Moves `I[i][j]` by `delta`, saturating at the bounds.
    pub fn nudge(&mut self, i: usize, j: usize, delta: S) {
        let v = self.get(i, j) + delta;
        self.set(i, j, v);
    }
}

impl<S: Scalar> ReputationMatrix<S> {
    /// Folds an incoming gossip payload into `R[i][j]`:
    /// `R <- R * (1 - omega) + payload * omega`.
    pub fn absorb(&mut self, i: usize, j: usize, payload: S, omega: S) {
        let v = self.get(i, j) * (S::one() - omega) + payload * omega;
        self.set(i, j, v);
    }
}

/// Decision-time view agent `i` holds of agent `j`: a convex blend of the
/// direct image and the gossip reputation.
pub fn perception<S: Scalar>(
    i: usize,
    j: usize,
    images: &ImageMatrix<S>,
    reputations: &ReputationMatrix<S>,
    image_weight: S,
) -> S {
    assert_ne!(i, j, "perception of oneself is undefined");
    image_weight * images.get(i, j) + (S::one() - image_weight) * reputations.get(i, j)
}
