//! Recursive domain equations over effective Scott-domain bases, domain-pers
//! and their least fixed points, dense parts, the η machinery behind
//! admissibility, and qcb₀ fixed points over finite spaces.

pub mod basis;
pub mod construct;
pub mod functor;
pub mod per;
pub mod lfp;
pub mod dense;
pub mod eta;
pub mod qcb;
pub mod oracle;
