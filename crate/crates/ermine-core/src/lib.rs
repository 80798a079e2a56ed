//! Concentration analysis for empirical risk minimizers over metric spaces.
//!
//! The crate turns a family of finite-sample concentration inequalities into
//! executable form. Its pieces:
//!
//! * [`space`] — metric point sets, the asymmetric set-to-set divergence
//!   sup-inf ϑ(E₁;E₂), the estimation-problem interface, and deterministic
//!   counter-based randomness.
//! * [`orlicz`] — ψ_q Orlicz norms (empirical and closed-form), sub-gamma
//!   tails and quantiles, a matrix Bernstein tail, and two McDiarmid-type
//!   deviation bounds with a simulation checker.
//! * [`bounds`] — the bound calculus: derived constants, the master
//!   concentration bound on ϑ(Ŝ;S), its β=2/α=1 specialization, and the
//!   conditional-expectation bound.
//! * [`hoffman`] — exact Hoffman constants by subset enumeration, the LASSO
//!   certificate matrix, and the Łojasiewicz-constant machinery they feed.
//! * [`transport`] — exact discrete optimal transport (network simplex with
//!   Kantorovich potentials, plus a 1-D monotone fast path) and the
//!   entropic-Wasserstein barycenter solver.
//! * [`problems`] — four concrete estimation problems (Euclidean and
//!   spider-tree barycenters, leading eigenvector on the sphere, LASSO,
//!   entropic barycenter) with verifiers for the assumptions the bound
//!   calculus consumes.
//!
//! The crate is `no_std`-compatible (with `alloc`); the `std` feature (on by
//! default) switches the numeric kernels to the standard-library versions.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
// Validation code writes `!(x > 0.0)` on floats deliberately: the negated
// comparison also rejects NaN, which the "simplified" `x <= 0.0` would let
// straight through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod hoffman;
pub mod orlicz;
pub mod problems;
pub mod space;
pub mod transport;
