"""Step definitions for e2e BDD tests."""
