#!/usr/bin/env python3
from setuptools import setup

setup(
    name='lowregret',
    version='1.0',
    description='Robustify next-token prediction models into low-regret models and measure the cost in TV distance',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3'
        ],
    keywords='online learning, regret, hedge, quantal response, total variation',
    python_requires='>=3.8, <4',
    py_modules=[
        'adversary', 'bounded', 'core', 'dataset', 'decision', 'experiments', 'lowregret', 'metrics', 'models',
        'output', 'regret', 'robustify', 'specs', 'vswitch'
        ],
    install_requires=['numpy>=1.22', 'pyhocon>=0.3.58', 'pyparsing>=3.0,<4', 'yachalk>=0.1.5'],
    extras_require={'test': ['pytest>=7']},
    entry_points={
        'console_scripts' : ['lowregret=lowregret:main']
        }
)
