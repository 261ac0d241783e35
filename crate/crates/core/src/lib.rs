//! Fractional-order chaotic systems: a Caputo Adams–Bashforth–Moulton
//! integrator, the financial and Volta systems, master–slave synchronization
//! by nonlinear control, and the analyses used to check it.

pub mod analysis;
pub mod cli;
pub mod control;
pub mod matrix;
pub mod solver;
pub mod special;
pub mod system;
