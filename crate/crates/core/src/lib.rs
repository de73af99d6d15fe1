//! Kernel spectral curvature clustering (KSCC).
//!
//! Data drawn from a union of parametric surfaces (circles, spheres, conics,
//! Lissajous curves, two-view epipolar manifolds, ...) is implicitly lifted by
//! a kernel into a feature space where every surface becomes a flat. The
//! flats are then separated with multi-way polar-curvature affinities and
//! spectral clustering, computed from the Gram matrix alone.
//!
//! The pipeline, bottom up:
//!
//! - [`kernels`]: closed-form kernels, Gram matrices, block centering.
//! - [`curvature`]: squared polar curvature of `ell + 2` feature points and
//!   whole curvature columns via an adjugate fast path.
//! - [`weights`]: Gaussian affinities, the sigma sweep and the sampled
//!   pairwise weight estimate.
//! - [`spectral`]: normalized spectral clustering with seeded k-means++.
//! - [`driver`]: tuple sampling, kernel least-squares scoring and the
//!   iterative resampling loop.
//! - [`datagen`]: seeded synthetic surface datasets.
//! - [`eval`]: misclassification rate and repeated-run benchmarks.

mod dd;
pub mod curvature;
pub mod datagen;
pub mod driver;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod spectral;
pub mod weights;

/// Matrix types used throughout the public API.
pub use nalgebra;

pub use curvature::{curvature_column, polar_curvature_sq, CurvatureColumn, TupleIndex};
pub use driver::{
    kls_error, run_kscc, sample_tuples_from_clusters, sample_tuples_uniform, KlsError,
    KsccConfig, RunReport, SampleSet, SigmaChoice,
};
pub use error::{KsccError, Result};
pub use eval::{misclassification_rate, run_benchmark, BenchmarkReport, BenchmarkRow};
pub use kernels::{build_kernel_matrix, center_kernel_block, eval_kernel, KernelMatrix, KernelSpec};
pub use spectral::{kmeans, spectral_cluster, Clustering};
pub use weights::{affinity, estimate_weights, sigma_sq_from_sweep, SortedCurvatures, WeightMatrix};
