pub mod bethe;
pub mod coeffring;
pub mod fockspace;
pub mod freealg;
pub mod laxkit;
pub mod qstates;
pub mod verify;
