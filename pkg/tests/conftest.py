import os
import sys

# Make the sibling support module importable regardless of rootdir layout.
sys.path.insert(0, os.path.dirname(__file__))
