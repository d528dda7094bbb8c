pub mod terms;
pub mod algebra;
pub mod kdefinite;
pub mod category;
pub mod catalog;
pub mod derived;
pub mod decide;
