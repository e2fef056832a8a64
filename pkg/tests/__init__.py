"""Unit test package for study_resolv."""
