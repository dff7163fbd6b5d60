//! Local and global maximal operators, rearrangements, medians, mean
//! oscillations, sparse families and local Calderón–Zygmund kernels.

mod kernel;
mod maximal;
mod oscillation;
mod sparse;

pub use kernel::{
    apply_local_cz, verify_kernel_conditions, KernelReport, KernelRule, LocalCzKernel, MIN_SAMPLE_BUDGET,
};
pub use maximal::{full_maximal, m_loc};
pub use oscillation::{decreasing_rearrangement, mean_oscillation, median, Rearrangement, DEFAULT_LEVEL};
pub use sparse::{sparse_decompose, SparseCheck, SparseFamily, SparseMember};
