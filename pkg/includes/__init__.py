"""Library modules for blockspec.

Matrix core, closed-form bounds, the group planner, joint compression and the
certification harness.
"""
