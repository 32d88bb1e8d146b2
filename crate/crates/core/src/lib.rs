pub mod expr;
pub mod geometry;
pub mod jacobi;
pub mod quadrature;
pub mod verify;
pub mod integrate;
pub mod cli;
