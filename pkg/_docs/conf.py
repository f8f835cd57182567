# -*- coding: utf-8 -*-
#
# hermitelab documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys
hermitelab_dir = os.path.abspath(os.path.join(os.path.dirname(__file__), '../'))
sys.path.insert(0, hermitelab_dir)
import hermitelab


# -- General configuration ------------------------------------------------
autoclass_content = "both"  # include both class docstring and __init__
autodoc_default_flags = [
    "members",
    "show-inheritance"
]
autosummary_generate = True
napoleon_numpy_docstring = False  # Google style only
napoleon_use_rtype = False

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.githubpages']

templates_path = ['_templates']
source_suffix = ['.rst', '.md']
master_doc = 'index'

project = u'hermitelab'
copyright = u'2026, hermitelab authors'
author = u'hermitelab authors'

version = hermitelab.__version__
release = hermitelab.__version__

language = None
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'


# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'
html_static_path = ['_static']
htmlhelp_basename = 'hermitelabdoc'
