//! Resource allocation for energy-harvesting cognitive-radio IoT networks.
//!
//! Devices sense licensed spectrum cooperatively, harvest energy broadcast
//! by an access point for a fraction `mu` of the data slot, and transmit
//! uplink for the rest. This crate evaluates the energy-efficiency /
//! spectral-efficiency objective and its constraints, solves the joint
//! channel-assignment and harvesting-ratio problem heuristically
//! ([`instant`]) and exhaustively ([`oracle`]), and replays the per-slot
//! energy recursion over many slots ([`sim`]).

pub mod allocation;
pub mod energy;
pub mod error;
pub mod instant;
pub mod objective;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod search;
pub mod sim;
pub mod throughput;

pub use allocation::Allocation;
pub use error::{ModelError, SolveError};
pub use instant::{solve_instant, InstantConfig, InstantSolution, SolverTrace};
pub use objective::{check_feasibility, evaluate, FeasibilityReport, ObjectiveBreakdown};
pub use oracle::{gap, solve_oracle, OracleConfig, OracleSolution};
pub use report::{SolveReport, SolverKind};
pub use scenario::{generate_scenario, BufferDistribution, Device, Scenario, ScenarioParams, SensingModel, SlotTiming};
pub use sim::{run_simulation, HarvestModel, SimConfig, SimSolver, SlotRecord};
