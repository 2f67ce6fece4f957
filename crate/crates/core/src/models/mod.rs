pub mod car;
pub mod nav;
