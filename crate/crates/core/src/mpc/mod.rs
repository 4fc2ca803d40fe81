pub struct MpcConfig;
pub struct MpcSolution;
pub enum SolveStatus { Optimal }
