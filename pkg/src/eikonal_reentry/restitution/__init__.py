"""Restitution tables and the membrane model used to generate them."""

from .tables import RestitutionTable, TableError, apd_of, cv_of, flat_table, load_table, save_table

__all__ = ["RestitutionTable", "TableError", "apd_of", "cv_of", "flat_table", "load_table", "save_table"]
