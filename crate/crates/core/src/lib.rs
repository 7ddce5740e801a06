pub mod arm_model;
pub mod statics;
pub mod twin_control;
pub mod teleop;
pub mod harness;
