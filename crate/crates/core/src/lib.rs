pub mod analysis;
pub mod autodiff;
pub mod cli;
pub mod config;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod networks;
pub mod optim;
pub mod oracle;
pub mod sampling;
pub mod trainer;
pub mod tridiag;
