"""End-to-end BDD tests."""
