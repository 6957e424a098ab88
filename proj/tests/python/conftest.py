import os
import sys

# The replay oracle lives next to the C++ tests.
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "oracles"))
