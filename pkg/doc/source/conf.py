# -*- coding: utf-8 -*-
#
# smpcnav documentation build configuration file.

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'smpcnav'
version = u'0.1'
release = u'0.1.0'

language = None
exclude_patterns = []
pygments_style = 'sphinx'
todo_include_todos = False

html_theme = 'sphinx_rtd_theme'
htmlhelp_basename = 'smpcnavdoc'

man_pages = [
    (master_doc, 'smpcnav', u'smpcnav Documentation', [], 1)
]
