//! Toolkit for studying activation of genuine multipartite entanglement:
//! three-qubit constituent mixtures, fully decomposable two-copy witnesses
//! found by SDP, biseparability certification by mixture subtraction, and
//! shot-level witness estimation with multinomial error propagation.

pub mod adapter;
pub mod bisep;
pub mod io;
pub mod linalg;
pub mod pauli;
pub mod pipeline;
pub mod sdp;
pub mod sim;
pub mod states;
pub mod witness;
