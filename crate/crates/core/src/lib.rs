pub mod cli;
pub mod expr;
pub mod optimality;
pub mod solver;
pub mod gridfn;
pub mod timescale;
pub mod varproblem;
