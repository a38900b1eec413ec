from setuptools import setup

requirements = [
      'joblib',
      'numpy',
      'pandas',
      'PyYAML',
      'scikit-learn',
      'scipy'
]

setup(name='blip4os',
      version=0.1,
      description='Best linear unbiased and invariant prediction of future order statistics',
      packages=['blip4os'],
      install_requires=requirements,
      scripts=['bin/blip4os']
      )
