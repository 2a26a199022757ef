from flask_sqlalchemy import SQLAlchemy

# Uninitialised; create_app binds it
db = SQLAlchemy()
