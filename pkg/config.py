import os


class Config:
    # Database configuration
    SQLALCHEMY_DATABASE_URI = os.environ.get('DATABASE_URL') or \
        'sqlite:///context_engine.db'
    SQLALCHEMY_TRACK_MODIFICATIONS = False

    # Chat-completions endpoint (agent under test and judge)
    LLM_BASE_URL = os.environ.get('LLM_BASE_URL') or ''
    LLM_API_KEY = os.environ.get('LLM_API_KEY') or ''
    LLM_MODEL = os.environ.get('LLM_MODEL') or 'npc-agent'
    LLM_TIMEOUT = float(os.environ.get('LLM_TIMEOUT') or 30)
    LLM_MAX_RETRIES = int(os.environ.get('LLM_MAX_RETRIES') or 3)
    LLM_MAX_PARALLEL = int(os.environ.get('LLM_MAX_PARALLEL') or 4)
    LLM_BACKOFF_BASE = float(os.environ.get('LLM_BACKOFF_BASE') or 0.5)
    LLM_VERBOSE = (os.environ.get('LLM_VERBOSE') or 'false').lower() in ('1', 'true', 'yes')

    # Token budget
    TOKEN_BUDGET_INPUT = int(os.environ.get('TOKEN_BUDGET_INPUT') or 2000)
    TOKEN_BUDGET_OUTPUT = int(os.environ.get('TOKEN_BUDGET_OUTPUT') or 200)
    TOKENS_PER_MESSAGE = int(os.environ.get('TOKENS_PER_MESSAGE') or 4)

    # Reward weights
    REWARD_ETA_TOOL = float(os.environ.get('REWARD_ETA_TOOL') or 0.5)
    REWARD_ETA_DLG = float(os.environ.get('REWARD_ETA_DLG') or 0.5)

    # GRPO
    GRPO_CLIP_EPS = float(os.environ.get('GRPO_CLIP_EPS') or 0.2)
    GRPO_ENTROPY_ALPHA = float(os.environ.get('GRPO_ENTROPY_ALPHA') or 0.01)
    GRPO_KL_BETA_INIT = float(os.environ.get('GRPO_KL_BETA_INIT') or 1e-3)
    GRPO_KL_TARGET = float(os.environ.get('GRPO_KL_TARGET') or 0.1)
    GRPO_KL_COEF = float(os.environ.get('GRPO_KL_COEF') or 0.001)
    GRPO_GROUP_SIZE = int(os.environ.get('GRPO_GROUP_SIZE') or 5)
    GRPO_ADVANTAGE_EPS = float(os.environ.get('GRPO_ADVANTAGE_EPS') or 1e-8)

    # Tool-call post-processing
    TOOL_ANNOTATIONS_PATH = os.environ.get('TOOL_ANNOTATIONS_PATH') or None

    # Judge sees the reference answer during offline evaluation
    JUDGE_INCLUDE_REFERENCE = (os.environ.get('JUDGE_INCLUDE_REFERENCE') or 'true').lower() in ('1', 'true', 'yes')


class DevelopmentConfig(Config):
    DEBUG = True
    SQLALCHEMY_ECHO = True
    SQLALCHEMY_DATABASE_URI = os.environ.get('DATABASE_URL') or \
        'sqlite:///context_engine_dev.db'


class ProductionConfig(Config):
    DEBUG = False
    SQLALCHEMY_DATABASE_URI = os.environ.get('DATABASE_URL') or \
        'mysql+pymysql://root:@localhost/context_engine'


class TestingConfig(Config):
    TESTING = True
    SQLALCHEMY_DATABASE_URI = 'sqlite:///:memory:'
    LLM_BASE_URL = ''
    LLM_API_KEY = ''
    LLM_MAX_RETRIES = 2
    LLM_BACKOFF_BASE = 0.0
    LLM_MAX_PARALLEL = 1
    TOOL_ANNOTATIONS_PATH = None
