//! Budget online multiple kernel classification.
//!
//! A pool of kernels each carries its own online kernel classifier; a Hedge
//! layer learns how to combine them. The sparse passive-aggressive learner
//! ([`learners::spa_apply`]) adds a support vector only with probability
//! `min(alpha, loss) / beta` and rescales the step to keep the update
//! unbiased, so the expected number of support vectors grows at most like
//! `alpha T / beta`. Kernel perceptron combinations and four hard-budget
//! learners (RBP, Forgetron, BOGD, BPAS) are provided for comparison.
//!
//! ```
//! use bomkc::{dataset, kernels, multi_kernel::{Algorithm, MultiKernel, MultiKernelParams}};
//! use bomkc::prng::RngStream;
//!
//! let data = dataset::synth_two_blobs(200, 4.0, 2, &mut RngStream::new(1, 0)).unwrap();
//! let mut model = MultiKernel::new(Algorithm::Spa, &kernels::default_pool(), MultiKernelParams::default(), 7).unwrap();
//! let mistakes = data.instances.iter().filter(|x| model.round(x).mistake).count();
//! assert!(mistakes < 100);
//! ```

pub mod classifier;
pub mod dataset;
pub mod error;
pub mod kernels;
pub mod learners;
pub mod multi_kernel;
pub mod prng;

pub use error::{Error, Result};
