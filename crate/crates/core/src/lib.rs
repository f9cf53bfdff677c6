pub mod calculus;
pub mod diagram;
pub mod entail;
pub mod ground;
pub mod join;
pub mod oracle;
pub mod parse;
pub mod solver;
pub mod subst;
pub mod syntax;
pub mod termination;
pub mod trs;
