//! Independent brute-force reference implementations. They share no code
//! path with the production modules they are used to check.

mod analysis;
mod movegen;
mod nash;
mod search;

pub use analysis::{brute_force_cycles, eigen_embedding_distances};
pub use movegen::{reference_legal_moves, reference_perft};
pub use nash::{
    gauss_solve, grid_maximin, grid_minimax, max_entropy_over_hull, nash_polytope_vertices,
    reference_max_entropy_nash,
};
pub use search::mating_moves;
