#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# survint documentation build configuration file.
#
# The API reference under api/ is generated by sphinx-apidoc, see ``invoke docs``.

import sphinx_rtd_theme  # For read the docs theme

import survint

# -- General configuration ---------------------------------------------

extensions = [
    'm2r',
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
    'autodocsumm',
]

autodoc_default_options = {
    'autosummary': True,
}

templates_path = ['_templates']
source_suffix = ['.rst', '.md']
master_doc = 'index'

project = 'survint'
slug = 'survint'
title = project + ' Documentation'
copyright = '2026, MIT Data To AI Lab'
author = 'MIT Data To AI Lab'
description = 'Time-indexed Shapley interaction explanations for survival models'

version = survint.__version__
release = survint.__version__

language = 'en'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
todo_include_todos = False

# -- Options for HTML output -------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
html_theme_options = {
    'collapse_navigation': False,
    'display_version': False,
}
htmlhelp_basename = slug + 'doc'

# -- Options for other outputs -----------------------------------------

latex_documents = [(master_doc, slug + '.tex', title, author, 'manual')]
man_pages = [(master_doc, slug, title, [author], 1)]
texinfo_documents = [
    (master_doc, slug, title, author, slug, description, 'Miscellaneous'),
]
